"""Relying-party / SSO server core.

Runs registration and authentication ceremonies against stored credentials,
enforces challenge freshness and single use, RP binding, and signature-counter
monotonicity, maintains the immutable identity registry, and issues opaque
session tokens once a login session completes. All mutating checks happen
under one lock so racing ceremonies resolve deterministically.
"""

from __future__ import annotations

import base64
import dataclasses
import json
import secrets
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Set

from .authenticator import AssertionResponse, AttestationResponse, DeviceKind
from .clock import Clock, SystemClock
from .crypto_core import (
    Challenge,
    ChallengePurpose,
    load_public_key_der,
    new_challenge,
    rp_id_hash,
    sha256,
    verify_signature,
)
from .errors import (
    BadSignatureError,
    ChallengeExpiredError,
    ChallengeReusedError,
    ChallengeUnknownError,
    NoCredentialError,
    NoSuchDeviceError,
    NoSuchUserError,
    SessionNotReadyError,
    ValidationError,
)

DEFAULT_TOKEN_TTL_MS = 3_600_000


class CredentialState(str, Enum):
    ACTIVE = "active"
    REVOKED = "revoked"
    WIPED = "wiped"

    @property
    def terminal(self) -> bool:
        return self is not CredentialState.ACTIVE


class VerificationFailure(str, Enum):
    BAD_SIGNATURE = "BadSignature"
    RP_MISMATCH = "RpMismatch"
    CHALLENGE_UNKNOWN = "ChallengeUnknown"
    CHALLENGE_EXPIRED = "ChallengeExpired"
    CHALLENGE_REUSED = "ChallengeReused"
    COUNTER_REGRESSION = "CounterRegression"
    CREDENTIAL_INACTIVE = "CredentialInactive"


@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    failure: Optional[VerificationFailure] = None

    def __post_init__(self) -> None:
        if self.ok == (self.failure is not None):
            raise ValidationError("ok must be true exactly when failure is absent")

    @classmethod
    def success(cls) -> "VerificationResult":
        return cls(ok=True)

    @classmethod
    def fail(cls, failure: VerificationFailure) -> "VerificationResult":
        return cls(ok=False, failure=failure)


@dataclass
class Credential:
    """A registered public-key record binding an authenticator to a user and RP.

    `counter_seen` never decreases; Revoked and Wiped are terminal states.
    """

    credential_id: str
    user_id: str
    rp_id: str
    public_key: bytes  # DER
    kind: DeviceKind
    device_id: str
    counter_seen: int = 0
    state: CredentialState = CredentialState.ACTIVE
    created_at: int = 0


@dataclass(frozen=True)
class UserIdentity:
    """Registered identity; display_name is immutable after creation."""

    user_id: str
    email: str
    display_name: str
    face_template_ref: Optional[str] = None


@dataclass(frozen=True)
class SessionToken:
    token: str
    user_id: str
    issued_at: int
    expires_at: int


class RelyingPartyServer:
    """Credential, challenge, identity, and token store for one relying party."""

    def __init__(
        self,
        rp_id: str,
        clock: Optional[Clock] = None,
        challenge_ttl_ms: int = 120_000,
        token_ttl_ms: int = DEFAULT_TOKEN_TTL_MS,
    ):
        if not rp_id:
            raise ValidationError("rp_id must be nonempty")
        self.rp_id = rp_id
        self._rp_hash = rp_id_hash(rp_id)
        self._clock = clock or SystemClock()
        self._challenge_ttl = challenge_ttl_ms
        self._token_ttl = token_ttl_ms
        self._lock = threading.RLock()
        self._users: Dict[str, UserIdentity] = {}
        self._credentials: Dict[str, Credential] = {}
        self._challenges: Dict[str, Challenge] = {}
        self._devices: Dict[str, DeviceKind] = {}
        self._wipe_directives: Set[str] = set()
        self._wiped_devices: Set[str] = set()  # permanent; wiped ids never re-enroll
        self._tokens: Dict[str, SessionToken] = {}

    # -- identity registry ----------------------------------------------

    def register_user(
        self, email: str, display_name: str, user_id: Optional[str] = None
    ) -> UserIdentity:
        if not email or not display_name:
            raise ValidationError("email and display_name must be nonempty")
        with self._lock:
            if any(u.email == email for u in self._users.values()):
                raise ValidationError(f"email already registered: {email}")
            uid = user_id or f"u-{secrets.token_hex(6)}"
            if uid in self._users:
                raise ValidationError(f"user_id already registered: {uid}")
            user = UserIdentity(user_id=uid, email=email, display_name=display_name)
            self._users[uid] = user
            return user

    def get_user(self, user_id: str) -> Optional[UserIdentity]:
        with self._lock:
            return self._users.get(user_id)

    def require_user(self, user_id: str) -> UserIdentity:
        user = self.get_user(user_id)
        if user is None:
            raise NoSuchUserError(user_id)
        return user

    def link_face_template(self, user_id: str, template_ref: str) -> UserIdentity:
        """Attach a face-template reference. display_name/email stay untouched."""
        with self._lock:
            user = self.require_user(user_id)
            updated = dataclasses.replace(user, face_template_ref=template_ref)
            self._users[user_id] = updated
            return updated

    def list_users(self) -> List[UserIdentity]:
        with self._lock:
            return list(self._users.values())

    # -- device registry --------------------------------------------------

    def announce_device(self, device_id: str, kind: DeviceKind) -> None:
        with self._lock:
            self._devices[device_id] = DeviceKind(kind)

    def knows_device(self, device_id: str) -> bool:
        with self._lock:
            return device_id in self._devices

    # -- registration ceremony --------------------------------------------

    def begin_registration(self, user_id: str, rp_id: Optional[str] = None) -> Challenge:
        self.require_user(user_id)
        challenge = new_challenge(
            rp_id or self.rp_id,
            user_id,
            ChallengePurpose.REGISTRATION,
            self._challenge_ttl,
            issued_at=self._clock.now_ms(),
        )
        with self._lock:
            self._challenges[challenge.nonce.hex()] = challenge
        return challenge

    def finish_registration(
        self, attestation: AttestationResponse, challenge_nonce: bytes
    ) -> Credential:
        """Verify the attestation and store the credential Active at counter 0.

        The challenge is consumed on success and on any signature failure, so a
        rejected attestation cannot be probed against the same challenge.
        """
        with self._lock:
            challenge = self._challenges.get(challenge_nonce.hex())
            if challenge is None:
                raise ChallengeUnknownError("no pending challenge for this nonce")
            if challenge.purpose is not ChallengePurpose.REGISTRATION:
                raise ValidationError("challenge was not issued for registration")
            if challenge.consumed:
                raise ChallengeReusedError("registration challenge already consumed")
            if challenge.is_expired(self._clock.now_ms()):
                challenge.consume()
                raise ChallengeExpiredError("registration challenge expired")

            try:
                self._verify_attestation(attestation, challenge)
            except BadSignatureError:
                challenge.consume()
                raise

            challenge.consume()
            if attestation.device_id in self._wiped_devices:
                raise ValidationError(
                    f"device {attestation.device_id} was remotely wiped; "
                    "enroll a fresh device identity"
                )
            if attestation.credential_id in self._credentials:
                raise ValidationError("credential_id already registered")
            credential = Credential(
                credential_id=attestation.credential_id,
                user_id=challenge.user_id,
                rp_id=self.rp_id,
                public_key=attestation.public_key,
                kind=attestation.kind,
                device_id=attestation.device_id,
                counter_seen=0,
                state=CredentialState.ACTIVE,
                created_at=self._clock.now_ms(),
            )
            self._credentials[credential.credential_id] = credential
            self._devices.setdefault(attestation.device_id, attestation.kind)
            return credential

    def _verify_attestation(self, attestation: AttestationResponse, challenge: Challenge) -> None:
        payload = attestation.signed_payload
        if payload.challenge_hash != sha256(challenge.nonce):
            raise BadSignatureError("attestation does not bind this challenge")
        if payload.rp_id_hash != self._rp_hash:
            raise BadSignatureError("attestation is bound to a different relying party")
        try:
            public_key = load_public_key_der(attestation.public_key)
        except Exception as exc:
            raise BadSignatureError(f"unusable public key: {exc}") from exc
        if not verify_signature(public_key, payload, attestation.signature):
            raise BadSignatureError("attestation signature invalid")

    # -- authentication ceremony --------------------------------------------

    def begin_authentication(self, user_id: str, rp_id: Optional[str] = None) -> Challenge:
        self.require_user(user_id)
        with self._lock:
            has_active = any(
                c.user_id == user_id and c.state is CredentialState.ACTIVE
                for c in self._credentials.values()
            )
            if not has_active:
                raise NoCredentialError(f"user {user_id} has no active credential")
            challenge = new_challenge(
                rp_id or self.rp_id,
                user_id,
                ChallengePurpose.AUTHENTICATION,
                self._challenge_ttl,
                issued_at=self._clock.now_ms(),
            )
            self._challenges[challenge.nonce.hex()] = challenge
            return challenge

    def finish_authentication(
        self, assertion: AssertionResponse, challenge_nonce: bytes
    ) -> VerificationResult:
        """Verify an assertion; every failure is a result, never an exception.

        Checks run in a fixed order: credential active -> challenge known ->
        unconsumed -> unexpired -> signature (including challenge binding) ->
        RP hash -> counter strictly above the last seen value. The challenge
        stays unconsumed only for CredentialInactive/ChallengeUnknown; every
        other outcome consumes it so one challenge cannot be probed repeatedly.
        """
        with self._lock:
            credential = self._credentials.get(assertion.credential_id)
            if credential is None or credential.state is not CredentialState.ACTIVE:
                return VerificationResult.fail(VerificationFailure.CREDENTIAL_INACTIVE)

            challenge = self._challenges.get(challenge_nonce.hex())
            if (
                challenge is None
                or challenge.purpose is not ChallengePurpose.AUTHENTICATION
                or challenge.user_id != credential.user_id
            ):
                # A challenge issued for another purpose or user is not a
                # usable challenge for this ceremony; leave it untouched.
                return VerificationResult.fail(VerificationFailure.CHALLENGE_UNKNOWN)
            if challenge.consumed:
                return VerificationResult.fail(VerificationFailure.CHALLENGE_REUSED)
            if challenge.is_expired(self._clock.now_ms()):
                challenge.consume()
                return VerificationResult.fail(VerificationFailure.CHALLENGE_EXPIRED)

            payload = assertion.signed_payload
            try:
                public_key = load_public_key_der(credential.public_key)
                signature_ok = verify_signature(public_key, payload, assertion.signature)
            except Exception:
                signature_ok = False
            if not signature_ok or payload.challenge_hash != sha256(challenge.nonce):
                challenge.consume()
                return VerificationResult.fail(VerificationFailure.BAD_SIGNATURE)

            if payload.rp_id_hash != self._rp_hash:
                challenge.consume()
                return VerificationResult.fail(VerificationFailure.RP_MISMATCH)

            if payload.counter <= credential.counter_seen:
                challenge.consume()
                return VerificationResult.fail(VerificationFailure.COUNTER_REGRESSION)

            challenge.consume()
            credential.counter_seen = payload.counter
            return VerificationResult.success()

    # -- session tokens ----------------------------------------------------

    def issue_session(self, user_id: str, completed_session) -> SessionToken:
        """Mint an opaque 32-byte token for a Complete login session."""
        state = getattr(completed_session, "state", None)
        state_value = getattr(state, "value", state)
        if state_value != "complete" or getattr(completed_session, "user_id", None) != user_id:
            raise SessionNotReadyError(
                f"session is not complete for user {user_id} (state={state_value})"
            )
        now = self._clock.now_ms()
        token = SessionToken(
            token=secrets.token_bytes(32).hex(),
            user_id=user_id,
            issued_at=now,
            expires_at=now + self._token_ttl,
        )
        with self._lock:
            self._tokens[token.token] = token
        return token

    def introspect_session(self, token: str) -> Optional[SessionToken]:
        """Resolve a token to its user; None if unknown or expired."""
        with self._lock:
            record = self._tokens.get(token)
            if record is None or self._clock.now_ms() >= record.expires_at:
                return None
            return record

    # -- credential access (used by admin and the orchestrator) -------------

    def credential(self, credential_id: str) -> Optional[Credential]:
        with self._lock:
            return self._credentials.get(credential_id)

    def credentials_for_user(self, user_id: str) -> List[Credential]:
        self.require_user(user_id)
        with self._lock:
            return [c for c in self._credentials.values() if c.user_id == user_id]

    def credentials_for_device(self, device_id: str) -> List[Credential]:
        with self._lock:
            return [c for c in self._credentials.values() if c.device_id == device_id]

    def active_credentials(self, user_id: str, kind: Optional[DeviceKind] = None) -> List[Credential]:
        with self._lock:
            return [
                c
                for c in self._credentials.values()
                if c.user_id == user_id
                and c.state is CredentialState.ACTIVE
                and (kind is None or c.kind is kind)
            ]

    def mark_credentials_wiped(self, device_id: str) -> int:
        """Flip every Active credential of one device to Wiped; returns the count."""
        if not self.knows_device(device_id):
            raise NoSuchDeviceError(device_id)
        with self._lock:
            wiped = 0
            for credential in self._credentials.values():
                if credential.device_id == device_id and credential.state is CredentialState.ACTIVE:
                    credential.state = CredentialState.WIPED
                    wiped += 1
            self._wipe_directives.add(device_id)
            return wiped

    def consume_wipe_directive(self, device_id: str) -> bool:
        """Deliver a queued wipe to the contacting device; clears the directive."""
        with self._lock:
            if device_id in self._wipe_directives:
                self._wipe_directives.discard(device_id)
                return True
            return False

    def import_credential(self, credential: Credential) -> None:
        """Load an externally obtained credential record (replica restore)."""
        with self._lock:
            self._credentials[credential.credential_id] = dataclasses.replace(credential)
            self._devices.setdefault(credential.device_id, credential.kind)

    # -- persistence ---------------------------------------------------------

    def save_state(self, path: str | Path) -> None:
        """Write users, devices, and credentials as one JSON record per line."""
        records: List[dict] = []
        with self._lock:
            for user in self._users.values():
                records.append(
                    {
                        "type": "user",
                        "user_id": user.user_id,
                        "email": user.email,
                        "display_name": user.display_name,
                        "face_template_ref": user.face_template_ref,
                    }
                )
            for device_id, kind in self._devices.items():
                records.append({"type": "device", "device_id": device_id, "kind": kind.value})
            for cred in self._credentials.values():
                records.append(
                    {
                        "type": "credential",
                        "credential_id": cred.credential_id,
                        "user_id": cred.user_id,
                        "rp_id": cred.rp_id,
                        "public_key": base64.b64encode(cred.public_key).decode("ascii"),
                        "kind": cred.kind.value,
                        "device_id": cred.device_id,
                        "counter_seen": cred.counter_seen,
                        "state": cred.state.value,
                        "created_at": cred.created_at,
                    }
                )
        text = "".join(json.dumps(record, sort_keys=True) + "\n" for record in records)
        Path(path).write_text(text, encoding="utf-8")

    def load_state(self, path: str | Path) -> None:
        """Replace the identity/credential stores with the persisted records."""
        users: Dict[str, UserIdentity] = {}
        devices: Dict[str, DeviceKind] = {}
        credentials: Dict[str, Credential] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            if record["type"] == "user":
                users[record["user_id"]] = UserIdentity(
                    user_id=record["user_id"],
                    email=record["email"],
                    display_name=record["display_name"],
                    face_template_ref=record["face_template_ref"],
                )
            elif record["type"] == "device":
                devices[record["device_id"]] = DeviceKind(record["kind"])
            elif record["type"] == "credential":
                credentials[record["credential_id"]] = Credential(
                    credential_id=record["credential_id"],
                    user_id=record["user_id"],
                    rp_id=record["rp_id"],
                    public_key=base64.b64decode(record["public_key"]),
                    kind=DeviceKind(record["kind"]),
                    device_id=record["device_id"],
                    counter_seen=record["counter_seen"],
                    state=CredentialState(record["state"]),
                    created_at=record["created_at"],
                )
        with self._lock:
            self._users = users
            self._devices = devices
            self._credentials = credentials
