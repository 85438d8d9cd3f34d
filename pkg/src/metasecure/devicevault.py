"""Opt-in local persistence for simulated authenticators.

Device state (including private keys) is stored only inside one AES-GCM
encrypted blob keyed by a local secret via scrypt; without a configured vault
the devices live in memory only. Enrolled face vectors ride along so a later
CLI invocation can produce a matching probe.
"""

from __future__ import annotations

import base64
import json
import os
from pathlib import Path
from typing import Dict, List, Optional

from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.scrypt import Scrypt

from .authenticator import AuthenticatorDevice, DeviceKind, _Slot
from .crypto_core import KeyPair
from .errors import EncodingError, ValidationError

_SCRYPT_N = 2**14


def _derive_key(secret: str, salt: bytes) -> bytes:
    kdf = Scrypt(salt=salt, length=32, n=_SCRYPT_N, r=8, p=1)
    return kdf.derive(secret.encode("utf-8"))


def _serialize_device(device: AuthenticatorDevice) -> dict:
    slots = []
    for credential_id, slot in device._slots.items():
        pem = slot.keypair.private_key.private_bytes(
            encoding=serialization.Encoding.PEM,
            format=serialization.PrivateFormat.PKCS8,
            encryption_algorithm=serialization.NoEncryption(),
        )
        slots.append(
            {
                "credential_id": credential_id,
                "key_id": slot.keypair.key_id,
                "rp_id": slot.rp_id,
                "user_id": slot.user_id,
                "counter": slot.counter,
                "private_key_pem": pem.decode("ascii"),
            }
        )
    return {
        "device_id": device.device_id,
        "kind": device.kind.value,
        "wiped": device.wiped,
        "slots": slots,
    }


def _restore_device(record: dict) -> AuthenticatorDevice:
    device = AuthenticatorDevice(DeviceKind(record["kind"]), device_id=record["device_id"])
    device.wiped = record["wiped"]
    for slot_record in record["slots"]:
        private_key = serialization.load_pem_private_key(
            slot_record["private_key_pem"].encode("ascii"), password=None
        )
        keypair = KeyPair(
            key_id=slot_record["key_id"],
            public_key=private_key.public_key(),
            private_key=private_key,
        )
        device._slots[slot_record["credential_id"]] = _Slot(
            keypair=keypair,
            rp_id=slot_record["rp_id"],
            user_id=slot_record["user_id"],
            counter=slot_record["counter"],
        )
    return device


class DeviceVault:
    """Encrypted wallet of local devices plus enrolled face vectors."""

    def __init__(self, path: str | Path, secret: str):
        if not secret:
            raise ValidationError("vault secret must be nonempty")
        self.path = Path(path)
        self._secret = secret
        self.devices: Dict[str, AuthenticatorDevice] = {}
        self.faces: Dict[str, List[float]] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        envelope = json.loads(self.path.read_text(encoding="utf-8"))
        try:
            salt = base64.b64decode(envelope["salt"])
            nonce = base64.b64decode(envelope["nonce"])
            ciphertext = base64.b64decode(envelope["ciphertext"])
            plaintext = AESGCM(_derive_key(self._secret, salt)).decrypt(nonce, ciphertext, None)
        except Exception as exc:
            raise EncodingError(f"cannot decrypt vault (wrong secret?): {exc}") from exc
        payload = json.loads(plaintext)
        self.devices = {
            record["device_id"]: _restore_device(record) for record in payload["devices"]
        }
        self.faces = payload.get("faces", {})

    def save(self) -> None:
        payload = json.dumps(
            {
                "devices": [_serialize_device(d) for d in self.devices.values()],
                "faces": self.faces,
            }
        ).encode("utf-8")
        salt = os.urandom(16)
        nonce = os.urandom(12)
        ciphertext = AESGCM(_derive_key(self._secret, salt)).encrypt(nonce, payload, None)
        envelope = {
            "salt": base64.b64encode(salt).decode("ascii"),
            "nonce": base64.b64encode(nonce).decode("ascii"),
            "ciphertext": base64.b64encode(ciphertext).decode("ascii"),
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(envelope), encoding="utf-8")

    def add_device(self, device: AuthenticatorDevice) -> None:
        self.devices[device.device_id] = device

    def device_for_kind(self, kind: DeviceKind, user_id: str) -> Optional[AuthenticatorDevice]:
        """A live device of this kind holding a credential for the user."""
        for device in self.devices.values():
            if device.kind is kind and not device.wiped:
                for credential_id in device.credential_ids():
                    if device._slots[credential_id].user_id == user_id:
                        return device
        return None

    def credential_for(self, device: AuthenticatorDevice, user_id: str) -> Optional[str]:
        for credential_id in device.credential_ids():
            if device._slots[credential_id].user_id == user_id:
                return credential_id
        return None
