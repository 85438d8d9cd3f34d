"""Triple-layer login state machine.

A login request lands in the user's approval feed and advances strictly
through device attestation (smartphone assertion), security-key verification
(security-key assertion plus an explicit origin-device acknowledgment), and
face verification. Completing the face step finishes the session and mints a
session token the origin device picks up by polling status. Steps never skip,
never reorder, and never backtrack; any state can be denied, and sessions
expire on a TTL.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

from .authenticator import AssertionResponse, DeviceKind
from .clock import Clock, SystemClock
from .errors import (
    NoSuchSessionError,
    OutOfOrderError,
    PrerequisiteError,
    SessionExpiredError,
    SessionTerminalError,
    ValidationError,
)
from .face_identity import FaceVerifier, PadClass
from .rp_server import RelyingPartyServer, SessionToken

DEFAULT_SESSION_TTL_MS = 300_000


class SessionState(str, Enum):
    PENDING = "pending"
    DEVICE_ATTESTED = "device_attested"
    KEY_VERIFIED = "key_verified"
    FACE_VERIFIED = "face_verified"
    COMPLETE = "complete"
    DENIED = "denied"
    EXPIRED = "expired"


class LoginStep(str, Enum):
    DEVICE_ATTESTATION = "device_attestation"
    SECURITY_KEY = "security_key"
    FACE = "face"


_EXPECTED_STEP: Dict[SessionState, LoginStep] = {
    SessionState.PENDING: LoginStep.DEVICE_ATTESTATION,
    SessionState.DEVICE_ATTESTED: LoginStep.SECURITY_KEY,
    SessionState.KEY_VERIFIED: LoginStep.FACE,
}

_STEP_KIND: Dict[LoginStep, DeviceKind] = {
    LoginStep.DEVICE_ATTESTATION: DeviceKind.SMARTPHONE,
    LoginStep.SECURITY_KEY: DeviceKind.SECURITY_KEY,
}


@dataclass
class AuthSession:
    session_id: str
    user_id: str
    service_provider: str
    origin_device_descriptor: str
    created_at: int
    ttl: int = DEFAULT_SESSION_TTL_MS
    state: SessionState = SessionState.PENDING
    step_evidence: Dict[str, dict] = field(default_factory=dict)
    session_token: Optional[SessionToken] = None

    @property
    def terminal(self) -> bool:
        return self.state in (SessionState.COMPLETE, SessionState.DENIED, SessionState.EXPIRED)

    def expired_at(self, now_ms: int) -> bool:
        return now_ms >= self.created_at + self.ttl


@dataclass(frozen=True)
class PendingRequest:
    session_id: str
    service_provider: str
    origin_device_descriptor: str
    requested_at: int


@dataclass(frozen=True)
class AssertionEvidence:
    """Evidence for the two authenticator steps.

    `device_acknowledged` records that the user confirmed the origin-device
    details in the approval UI; required for the security-key step.
    """

    challenge_nonce: bytes
    assertion: AssertionResponse
    device_acknowledged: bool = False


@dataclass(frozen=True)
class FaceEvidence:
    probe_vector: Sequence[float]
    probe_features: Sequence[float]


class StepFailure(str, Enum):
    VERIFICATION_FAILED = "VerificationFailed"
    WRONG_AUTHENTICATOR_KIND = "WrongAuthenticatorKind"
    CREDENTIAL_USER_MISMATCH = "CredentialUserMismatch"
    DEVICE_NOT_ACKNOWLEDGED = "DeviceNotAcknowledged"
    FACE_REJECTED = "FaceRejected"


@dataclass(frozen=True)
class StepResult:
    ok: bool
    session: AuthSession
    failure: Optional[StepFailure] = None
    detail: Optional[str] = None


class LoginOrchestrator:
    """Owns login sessions and drives them through the three layers."""

    def __init__(
        self,
        server: RelyingPartyServer,
        face_verifier: FaceVerifier,
        clock: Optional[Clock] = None,
        session_ttl_ms: int = DEFAULT_SESSION_TTL_MS,
    ):
        self.server = server
        self.face_verifier = face_verifier
        self._clock = clock or SystemClock()
        self._session_ttl = session_ttl_ms
        self._lock = threading.RLock()
        self._sessions: Dict[str, AuthSession] = {}
        self._order: List[str] = []  # creation order, for newest-first feeds

    # -- session lifecycle -------------------------------------------------

    def request_login(
        self, user_id: str, service_provider: str, origin_device_descriptor: str
    ) -> AuthSession:
        """Open a Pending session after checking all three layers are enrolled."""
        self.server.require_user(user_id)
        if not self.server.active_credentials(user_id, DeviceKind.SMARTPHONE):
            raise PrerequisiteError(LoginStep.DEVICE_ATTESTATION.value)
        if not self.server.active_credentials(user_id, DeviceKind.SECURITY_KEY):
            raise PrerequisiteError(LoginStep.SECURITY_KEY.value)
        if not self.face_verifier.store.has_template(user_id):
            raise PrerequisiteError(LoginStep.FACE.value)
        session = AuthSession(
            session_id=secrets.token_hex(16),
            user_id=user_id,
            service_provider=service_provider,
            origin_device_descriptor=origin_device_descriptor,
            created_at=self._clock.now_ms(),
            ttl=self._session_ttl,
        )
        with self._lock:
            self._sessions[session.session_id] = session
            self._order.append(session.session_id)
        return session

    def _get(self, session_id: str) -> AuthSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise NoSuchSessionError(session_id)
        return session

    def _gate(self, session: AuthSession) -> None:
        """Raise for sessions that can no longer advance; lazily mark expiry."""
        if session.state is SessionState.EXPIRED:
            raise SessionExpiredError(session.session_id)
        if not session.terminal and session.expired_at(self._clock.now_ms()):
            session.state = SessionState.EXPIRED
            raise SessionExpiredError(session.session_id)
        if session.terminal:
            raise SessionTerminalError(f"{session.session_id} is {session.state.value}")

    def advance(self, session_id: str, step: LoginStep, evidence) -> StepResult:
        """Validate one step's evidence and move the session forward.

        Evidence is checked by delegating to the relying-party server (for the
        two assertion steps) or to the face verifier. Invalid evidence returns
        a failed StepResult with the state unchanged; only ordering, expiry,
        and terminality violations raise.
        """
        with self._lock:
            session = self._get(session_id)
            self._gate(session)
            expected = _EXPECTED_STEP[session.state]
            if step is not expected:
                raise OutOfOrderError(
                    f"expected step {expected.value}, got {step.value}"
                )

            if step in _STEP_KIND:
                result = self._check_assertion(session, step, evidence)
            else:
                result = self._check_face(session, evidence)
            if result is not None:
                return result

            if step is LoginStep.DEVICE_ATTESTATION:
                session.state = SessionState.DEVICE_ATTESTED
            elif step is LoginStep.SECURITY_KEY:
                session.state = SessionState.KEY_VERIFIED
            else:
                # Face evidence completes the run: FaceVerified, then Complete.
                session.state = SessionState.FACE_VERIFIED
                session.state = SessionState.COMPLETE
                assert all(s.value in session.step_evidence for s in LoginStep)
                session.session_token = self.server.issue_session(session.user_id, session)
            return StepResult(ok=True, session=session)

    def _check_assertion(
        self, session: AuthSession, step: LoginStep, evidence: AssertionEvidence
    ) -> Optional[StepResult]:
        """Returns a failed StepResult, or None when the step evidence is valid."""
        if not isinstance(evidence, AssertionEvidence):
            raise ValidationError(f"step {step.value} requires assertion evidence")
        credential = self.server.credential(evidence.assertion.credential_id)
        if credential is not None:
            if credential.user_id != session.user_id:
                return StepResult(
                    ok=False, session=session, failure=StepFailure.CREDENTIAL_USER_MISMATCH
                )
            if credential.kind is not _STEP_KIND[step]:
                return StepResult(
                    ok=False,
                    session=session,
                    failure=StepFailure.WRONG_AUTHENTICATOR_KIND,
                    detail=f"step needs a {_STEP_KIND[step].value} credential",
                )
        if step is LoginStep.SECURITY_KEY and not evidence.device_acknowledged:
            return StepResult(
                ok=False, session=session, failure=StepFailure.DEVICE_NOT_ACKNOWLEDGED
            )
        verification = self.server.finish_authentication(
            evidence.assertion, evidence.challenge_nonce
        )
        if not verification.ok:
            return StepResult(
                ok=False,
                session=session,
                failure=StepFailure.VERIFICATION_FAILED,
                detail=verification.failure.value,
            )
        session.step_evidence[step.value] = {
            "credential_id": evidence.assertion.credential_id,
            "counter": evidence.assertion.signed_payload.counter,
            "verified_at": self._clock.now_ms(),
        }
        return None

    def _check_face(self, session: AuthSession, evidence: FaceEvidence) -> Optional[StepResult]:
        if not isinstance(evidence, FaceEvidence):
            raise ValidationError("face step requires face evidence")
        decision = self.face_verifier.verify_face(
            session.user_id, evidence.probe_vector, evidence.probe_features
        )
        if not decision.accepted:
            return StepResult(
                ok=False,
                session=session,
                failure=StepFailure.FACE_REJECTED,
                detail=f"pad={decision.pad.pad_class.value} confidence={decision.confidence:.4f}",
            )
        session.step_evidence[LoginStep.FACE.value] = {
            "confidence": decision.confidence,
            "pad": decision.pad.pad_class.value,
            "verified_at": self._clock.now_ms(),
        }
        return None

    def deny(self, session_id: str) -> AuthSession:
        with self._lock:
            session = self._get(session_id)
            self._gate(session)
            session.state = SessionState.DENIED
            return session

    def status(self, session_id: str) -> AuthSession:
        """Pollable view; lazily marks expiry so pollers see terminal states."""
        with self._lock:
            session = self._get(session_id)
            if not session.terminal and session.expired_at(self._clock.now_ms()):
                session.state = SessionState.EXPIRED
            return session

    def approval_feed(self, user_id: str) -> List[PendingRequest]:
        """Non-terminal sessions for this user only, newest first."""
        self.server.require_user(user_id)
        with self._lock:
            now = self._clock.now_ms()
            feed: List[PendingRequest] = []
            for session_id in reversed(self._order):
                session = self._sessions[session_id]
                if session.user_id != user_id:
                    continue
                if not session.terminal and session.expired_at(now):
                    session.state = SessionState.EXPIRED
                if session.terminal:
                    continue
                feed.append(
                    PendingRequest(
                        session_id=session.session_id,
                        service_provider=session.service_provider,
                        origin_device_descriptor=session.origin_device_descriptor,
                        requested_at=session.created_at,
                    )
                )
            return feed
