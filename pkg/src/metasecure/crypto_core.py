"""Primitive layer shared by the authenticator and the relying-party server.

Provides RSA-2048 keypairs, probabilistic (PSS) signing and verification over
SHA-256, single-use random challenges, and the fixed 69-byte signed-payload
encoding that binds a signature to a relying party, a challenge, and a
signature counter.
"""

from __future__ import annotations

import hashlib
import secrets
import struct
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from cryptography.exceptions import UnsupportedAlgorithm
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa
from cryptography.hazmat.primitives.asymmetric.rsa import RSAPrivateKey, RSAPublicKey

from .errors import ChallengeReusedError, EncodingError, GenerationError, ValidationError

RSA_KEY_BITS = 2048
SIGNATURE_LEN = RSA_KEY_BITS // 8
NONCE_LEN = 32
PAYLOAD_LEN = 69  # 32 rp hash + 1 flags + 4 counter + 32 challenge hash
DEFAULT_CHALLENGE_TTL_MS = 120_000

# Fixed PSS salt length (bytes). Still probabilistic; chosen so signatures
# interoperate with WebCrypto's RSA-PSS default of saltLength == hash size.
PSS_SALT_LEN = 32

FLAG_USER_PRESENT = 0x01

_COUNTER_MAX = 2**32 - 1


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def rp_id_hash(rp_id: str) -> bytes:
    return sha256(rp_id.encode("utf-8"))


def now_ms() -> int:
    return time.time_ns() // 1_000_000


class ChallengePurpose(str, Enum):
    REGISTRATION = "registration"
    AUTHENTICATION = "authentication"


@dataclass
class Challenge:
    """Single-use random nonce bound to a relying party, user, and purpose.

    `consumed` flips false -> true exactly once; a challenge is valid while it
    is unconsumed and `now < issued_at + ttl`.
    """

    nonce: bytes
    rp_id: str
    user_id: str
    purpose: ChallengePurpose
    issued_at: int
    ttl: int = DEFAULT_CHALLENGE_TTL_MS
    consumed: bool = False

    def is_expired(self, at_ms: int) -> bool:
        return at_ms >= self.issued_at + self.ttl

    def is_valid(self, at_ms: int) -> bool:
        return not self.consumed and not self.is_expired(at_ms)

    def consume(self) -> None:
        if self.consumed:
            raise ChallengeReusedError("challenge already consumed")
        self.consumed = True


def new_challenge(
    rp_id: str,
    user_id: str,
    purpose: ChallengePurpose,
    ttl: int = DEFAULT_CHALLENGE_TTL_MS,
    *,
    issued_at: Optional[int] = None,
) -> Challenge:
    """Issue a fresh unconsumed challenge with a 32-byte CSPRNG nonce."""
    if not rp_id:
        raise ValidationError("rp_id must be nonempty")
    if ttl <= 0:
        raise ValidationError("ttl must be positive")
    return Challenge(
        nonce=secrets.token_bytes(NONCE_LEN),
        rp_id=rp_id,
        user_id=user_id,
        purpose=purpose,
        issued_at=now_ms() if issued_at is None else issued_at,
        ttl=ttl,
    )


@dataclass(frozen=True)
class SignedPayload:
    """The exact bytes an authenticator signs.

    Serializes to 69 bytes: rp_id_hash (32) || flags (1) || counter
    (u32, big-endian) || challenge_hash (32). The relying-party hash and the
    counter ride inside the signature so RP binding and clone detection are
    enforceable server-side.
    """

    rp_id_hash: bytes
    flags: int
    counter: int
    challenge_hash: bytes

    def __post_init__(self) -> None:
        if len(self.rp_id_hash) != 32:
            raise EncodingError("rp_id_hash must be 32 bytes")
        if len(self.challenge_hash) != 32:
            raise EncodingError("challenge_hash must be 32 bytes")
        if not 0 <= self.flags <= 0xFF:
            raise EncodingError("flags must fit one byte")
        if not 0 <= self.counter <= _COUNTER_MAX:
            raise EncodingError("counter must fit an unsigned 32-bit integer")

    @property
    def user_present(self) -> bool:
        return bool(self.flags & FLAG_USER_PRESENT)

    def to_bytes(self) -> bytes:
        return (
            self.rp_id_hash
            + struct.pack(">B", self.flags)
            + struct.pack(">I", self.counter)
            + self.challenge_hash
        )

    @classmethod
    def from_bytes(cls, raw: bytes) -> "SignedPayload":
        if len(raw) != PAYLOAD_LEN:
            raise EncodingError(f"signed payload must be {PAYLOAD_LEN} bytes, got {len(raw)}")
        return cls(
            rp_id_hash=raw[:32],
            flags=raw[32],
            counter=struct.unpack(">I", raw[33:37])[0],
            challenge_hash=raw[37:69],
        )


@dataclass
class KeyPair:
    """A 2048-bit RSA pair. The private half lives only inside an authenticator."""

    key_id: str
    public_key: RSAPublicKey
    private_key: RSAPrivateKey = field(repr=False)


def generate_keypair() -> KeyPair:
    """Generate a fresh RSA-2048 pair; successive calls yield distinct moduli."""
    try:
        private_key = rsa.generate_private_key(public_exponent=65537, key_size=RSA_KEY_BITS)
    except (UnsupportedAlgorithm, OSError, MemoryError) as exc:
        raise GenerationError(f"keypair generation failed: {exc}") from exc
    return KeyPair(
        key_id=secrets.token_hex(8),
        public_key=private_key.public_key(),
        private_key=private_key,
    )


def _pss_sign_padding() -> padding.PSS:
    return padding.PSS(mgf=padding.MGF1(hashes.SHA256()), salt_length=PSS_SALT_LEN)


def _pss_verify_padding() -> padding.PSS:
    # AUTO infers the salt length so externally produced signatures
    # (e.g. WebCrypto with a different salt size) still verify.
    return padding.PSS(mgf=padding.MGF1(hashes.SHA256()), salt_length=padding.PSS.AUTO)


def sign_payload(private_key: RSAPrivateKey, payload: SignedPayload) -> bytes:
    """Sign the serialized payload with RSA-PSS/SHA-256. Output is 256 bytes."""
    if not isinstance(payload, SignedPayload):
        raise EncodingError("payload must be a SignedPayload")
    return private_key.sign(payload.to_bytes(), _pss_sign_padding(), hashes.SHA256())


def verify_signature(public_key: RSAPublicKey, payload: SignedPayload, signature: bytes) -> bool:
    """True iff `signature` is valid for `payload` under `public_key`.

    Never raises on garbage input; any malformed or forged input returns False.
    """
    try:
        raw = payload.to_bytes()
    except Exception:
        return False
    try:
        public_key.verify(bytes(signature), raw, _pss_verify_padding(), hashes.SHA256())
        return True
    except Exception:
        return False


def public_key_der(public_key: RSAPublicKey) -> bytes:
    """DER (SubjectPublicKeyInfo) encoding, the on-the-wire key format."""
    return public_key.public_bytes(
        encoding=serialization.Encoding.DER,
        format=serialization.PublicFormat.SubjectPublicKeyInfo,
    )


def load_public_key_der(der: bytes) -> RSAPublicKey:
    try:
        key = serialization.load_der_public_key(der)
    except Exception as exc:
        raise EncodingError(f"not a DER-encoded public key: {exc}") from exc
    if not isinstance(key, RSAPublicKey):
        raise EncodingError("public key is not RSA")
    return key
