"""Software authenticator: a simulated security key or smartphone.

Holds private keys that never leave the device object, produces registration
attestations and login assertions, keeps a strictly increasing signature
counter per credential, and supports a terminal wipe.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

from .clock import Clock, SystemClock
from .crypto_core import (
    FLAG_USER_PRESENT,
    Challenge,
    ChallengePurpose,
    KeyPair,
    SignedPayload,
    generate_keypair,
    public_key_der,
    rp_id_hash,
    sha256,
    sign_payload,
)
from .errors import (
    ChallengeExpiredError,
    DeviceWipedError,
    NoSuchCredentialError,
    RpMismatchError,
    ValidationError,
)


class DeviceKind(str, Enum):
    SECURITY_KEY = "security_key"
    SMARTPHONE = "smartphone"


@dataclass(frozen=True)
class AttestationResponse:
    """Registration output: the new public key plus a self-attestation signature."""

    credential_id: str
    public_key: bytes  # DER
    device_id: str
    kind: DeviceKind
    signed_payload: SignedPayload
    signature: bytes


@dataclass(frozen=True)
class AssertionResponse:
    """Authentication output: a signature over the server's challenge."""

    credential_id: str
    signed_payload: SignedPayload
    signature: bytes


@dataclass
class _Slot:
    keypair: KeyPair = field(repr=False)
    rp_id: str
    user_id: str
    counter: int = 0


class AuthenticatorDevice:
    """One simulated authenticator.

    A device instance is single-owner; calls on one device must be serialized
    by the caller. No operation returns or serializes private-key material.
    """

    def __init__(
        self,
        kind: DeviceKind,
        device_id: Optional[str] = None,
        clock: Optional[Clock] = None,
    ):
        self.kind = DeviceKind(kind)
        self.device_id = device_id or f"dev-{secrets.token_hex(6)}"
        self.wiped = False
        self._clock = clock or SystemClock()
        self._slots: Dict[str, _Slot] = {}

    def __repr__(self) -> str:
        return (
            f"AuthenticatorDevice(device_id={self.device_id!r}, kind={self.kind.value!r}, "
            f"slots={len(self._slots)}, wiped={self.wiped})"
        )

    def credential_ids(self) -> List[str]:
        return list(self._slots)

    def slot_counter(self, credential_id: str) -> int:
        slot = self._slots.get(credential_id)
        if slot is None:
            raise NoSuchCredentialError(credential_id)
        return slot.counter

    def _check_alive(self) -> None:
        if self.wiped:
            raise DeviceWipedError(f"device {self.device_id} has been wiped")

    def _check_challenge(self, challenge: Challenge, purpose: ChallengePurpose) -> None:
        if challenge.purpose is not purpose:
            raise ValidationError(
                f"challenge purpose {challenge.purpose.value} cannot be used for {purpose.value}"
            )
        if not challenge.is_valid(self._clock.now_ms()):
            raise ChallengeExpiredError("challenge is consumed or past its TTL")

    def make_credential(self, challenge: Challenge, rp_id: str, user_id: str) -> AttestationResponse:
        """Create a new credential slot and self-attest its public key.

        The new slot starts at counter 0; the attestation signature covers a
        registration payload embedding the challenge, so the server can verify
        possession of the freshly generated private key.
        """
        self._check_alive()
        self._check_challenge(challenge, ChallengePurpose.REGISTRATION)

        keypair = generate_keypair()
        credential_id = secrets.token_hex(16)
        self._slots[credential_id] = _Slot(keypair=keypair, rp_id=rp_id, user_id=user_id)

        payload = SignedPayload(
            rp_id_hash=rp_id_hash(rp_id),
            flags=FLAG_USER_PRESENT,
            counter=0,
            challenge_hash=sha256(challenge.nonce),
        )
        return AttestationResponse(
            credential_id=credential_id,
            public_key=public_key_der(keypair.public_key),
            device_id=self.device_id,
            kind=self.kind,
            signed_payload=payload,
            signature=sign_payload(keypair.private_key, payload),
        )

    def get_assertion(
        self,
        challenge: Challenge,
        rp_id: str,
        credential_id: str,
        user_present: bool = True,
    ) -> AssertionResponse:
        """Sign the challenge with the slot's private key.

        Refuses to sign for a relying party other than the one the slot was
        registered against (the authenticator-side phishing guard). The slot
        counter is incremented before signing, so the payload carries the new
        value.
        """
        self._check_alive()
        slot = self._slots.get(credential_id)
        if slot is None:
            raise NoSuchCredentialError(credential_id)
        if slot.rp_id != rp_id:
            raise RpMismatchError(f"slot is bound to {slot.rp_id!r}, not {rp_id!r}")
        self._check_challenge(challenge, ChallengePurpose.AUTHENTICATION)

        slot.counter += 1
        payload = SignedPayload(
            rp_id_hash=rp_id_hash(slot.rp_id),
            flags=FLAG_USER_PRESENT if user_present else 0,
            counter=slot.counter,
            challenge_hash=sha256(challenge.nonce),
        )
        return AssertionResponse(
            credential_id=credential_id,
            signed_payload=payload,
            signature=sign_payload(slot.keypair.private_key, payload),
        )

    def wipe(self) -> int:
        """Destroy all slots. Terminal and idempotent; returns the count destroyed."""
        destroyed = len(self._slots)
        self._slots.clear()
        self.wiped = True
        return destroyed
