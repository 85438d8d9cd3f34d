"""HTTP wire layer over the service core.

JSON bodies, all byte fields base64. Field names are part of the stable wire
schema documented in docs/wire-schema.md; change them only with that file.
"""

from __future__ import annotations

import base64
import threading
import time
from typing import List, Optional

import uvicorn
from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .authenticator import AssertionResponse, AttestationResponse, DeviceKind
from .crypto_core import Challenge, SignedPayload
from .errors import (
    AlreadyTerminalError,
    BadSignatureError,
    ChallengeExpiredError,
    ChallengeReusedError,
    ChallengeUnknownError,
    DeviceWipedError,
    EncodingError,
    MetasecureError,
    NoCredentialError,
    NoSuchCredentialError,
    NoSuchDeviceError,
    NoSuchSessionError,
    NoSuchUserError,
    NoTemplateError,
    OutOfOrderError,
    PrerequisiteError,
    RpMismatchError,
    SessionExpiredError,
    SessionNotReadyError,
    SessionTerminalError,
    ValidationError,
)
from .orchestrator import AssertionEvidence, AuthSession, FaceEvidence, LoginStep
from .rp_server import Credential, UserIdentity
from .service import MetasecureService

_ERROR_STATUS = {
    ValidationError: 400,
    EncodingError: 400,
    BadSignatureError: 400,
    NoSuchUserError: 404,
    NoSuchCredentialError: 404,
    NoSuchDeviceError: 404,
    NoSuchSessionError: 404,
    NoTemplateError: 404,
    ChallengeUnknownError: 404,
    ChallengeReusedError: 409,
    ChallengeExpiredError: 409,
    NoCredentialError: 409,
    PrerequisiteError: 409,
    AlreadyTerminalError: 409,
    DeviceWipedError: 409,
    RpMismatchError: 409,
    OutOfOrderError: 409,
    SessionExpiredError: 409,
    SessionTerminalError: 409,
    SessionNotReadyError: 409,
}


def _error_code(exc: MetasecureError) -> str:
    name = type(exc).__name__
    return name[:-5] if name.endswith("Error") else name


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(text: str, name: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except Exception as exc:
        raise ValidationError(f"{name} is not valid base64: {exc}") from exc


# -- request bodies -----------------------------------------------------------


class RegisterUserBody(BaseModel):
    email: str
    display_name: str
    user_id: Optional[str] = None


class BeginCeremonyBody(BaseModel):
    user_id: str


class AttestationBody(BaseModel):
    credential_id: str
    public_key: str
    device_id: str
    kind: str
    signed_payload: str
    signature: str


class FinishRegistrationBody(BaseModel):
    challenge_nonce: str
    attestation: AttestationBody


class AssertionBody(BaseModel):
    credential_id: str
    signed_payload: str
    signature: str


class FinishAuthenticationBody(BaseModel):
    challenge_nonce: str
    assertion: AssertionBody


class IntrospectBody(BaseModel):
    token: str


class EnrollFaceBody(BaseModel):
    user_id: str
    vector: List[float] = Field(min_length=1)


class RequestLoginBody(BaseModel):
    user_id: str
    service_provider: str
    origin_device_descriptor: str


class AdvanceBody(BaseModel):
    session_id: str
    step: str
    challenge_nonce: Optional[str] = None
    assertion: Optional[AssertionBody] = None
    device_acknowledged: bool = False
    probe_vector: Optional[List[float]] = None
    probe_features: Optional[List[float]] = None


class DenyBody(BaseModel):
    session_id: str


class RevokeBody(BaseModel):
    credential_id: str


class WipeBody(BaseModel):
    device_id: str


class DeviceSyncBody(BaseModel):
    device_id: str


# -- view serializers ---------------------------------------------------------


def _challenge_view(challenge: Challenge) -> dict:
    return {
        "nonce": _b64(challenge.nonce),
        "rp_id": challenge.rp_id,
        "user_id": challenge.user_id,
        "purpose": challenge.purpose.value,
        "issued_at_ms": challenge.issued_at,
        "ttl_ms": challenge.ttl,
    }


def _credential_view(credential: Credential) -> dict:
    return {
        "credential_id": credential.credential_id,
        "user_id": credential.user_id,
        "rp_id": credential.rp_id,
        "public_key": _b64(credential.public_key),
        "kind": credential.kind.value,
        "device_id": credential.device_id,
        "counter_seen": credential.counter_seen,
        "state": credential.state.value,
        "created_at_ms": credential.created_at,
    }


def _user_view(user: UserIdentity) -> dict:
    return {
        "user_id": user.user_id,
        "email": user.email,
        "display_name": user.display_name,
        "face_enrolled": user.face_template_ref is not None,
    }


def _session_view(session: AuthSession) -> dict:
    return {
        "session_id": session.session_id,
        "user_id": session.user_id,
        "service_provider": session.service_provider,
        "origin_device_descriptor": session.origin_device_descriptor,
        "state": session.state.value,
        "created_at_ms": session.created_at,
        "ttl_ms": session.ttl,
        "steps_done": sorted(session.step_evidence),
    }


def _parse_assertion(body: AssertionBody) -> AssertionResponse:
    return AssertionResponse(
        credential_id=body.credential_id,
        signed_payload=SignedPayload.from_bytes(_unb64(body.signed_payload, "signed_payload")),
        signature=_unb64(body.signature, "signature"),
    )


def create_app(
    service: MetasecureService,
    admin_token: Optional[str] = None,
    console_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="metasecure", docs_url=None, redoc_url=None)

    @app.exception_handler(MetasecureError)
    async def _handle_domain_error(_request: Request, exc: MetasecureError):
        status = 400
        for exc_type, code in _ERROR_STATUS.items():
            if isinstance(exc, exc_type):
                status = code
                break
        return JSONResponse(
            status_code=status, content={"error": _error_code(exc), "message": str(exc)}
        )

    def require_admin(authorization: Optional[str] = Header(default=None)) -> None:
        if admin_token is None:
            raise HTTPException(status_code=403, detail="admin API disabled")
        if authorization != f"Bearer {admin_token}":
            raise HTTPException(status_code=401, detail="bad admin token")

    # -- health / identity --------------------------------------------------

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok", "rp_id": service.server.rp_id}

    # -- users and faces -----------------------------------------------------

    @app.post("/users")
    def register_user(body: RegisterUserBody) -> dict:
        user = service.server.register_user(body.email, body.display_name, body.user_id)
        service.persist()
        return _user_view(user)

    @app.get("/users/{user_id}")
    def get_user(user_id: str) -> dict:
        return _user_view(service.server.require_user(user_id))

    @app.post("/enroll-face")
    def enroll_face(body: EnrollFaceBody) -> dict:
        service.enroll_face(body.user_id, body.vector)
        service.persist()
        return {"user_id": body.user_id, "face_enrolled": True}

    # -- registration ceremony ----------------------------------------------

    @app.post("/begin-registration")
    def begin_registration(body: BeginCeremonyBody) -> dict:
        return _challenge_view(service.server.begin_registration(body.user_id))

    @app.post("/finish-registration")
    def finish_registration(body: FinishRegistrationBody) -> dict:
        attestation = AttestationResponse(
            credential_id=body.attestation.credential_id,
            public_key=_unb64(body.attestation.public_key, "public_key"),
            device_id=body.attestation.device_id,
            kind=DeviceKind(body.attestation.kind),
            signed_payload=SignedPayload.from_bytes(
                _unb64(body.attestation.signed_payload, "signed_payload")
            ),
            signature=_unb64(body.attestation.signature, "signature"),
        )
        credential = service.server.finish_registration(
            attestation, _unb64(body.challenge_nonce, "challenge_nonce")
        )
        service.persist()
        return _credential_view(credential)

    # -- authentication ceremony ----------------------------------------------

    @app.post("/begin-authentication")
    def begin_authentication(body: BeginCeremonyBody) -> dict:
        return _challenge_view(service.server.begin_authentication(body.user_id))

    @app.post("/finish-authentication")
    def finish_authentication(body: FinishAuthenticationBody) -> dict:
        result = service.server.finish_authentication(
            _parse_assertion(body.assertion), _unb64(body.challenge_nonce, "challenge_nonce")
        )
        service.persist()
        return {"ok": result.ok, "failure": result.failure.value if result.failure else None}

    @app.post("/session-introspect")
    def session_introspect(body: IntrospectBody) -> dict:
        record = service.server.introspect_session(body.token)
        if record is None:
            return {"active": False}
        return {"active": True, "user_id": record.user_id, "expires_at_ms": record.expires_at}

    # -- login orchestration ---------------------------------------------------

    @app.post("/request-login")
    def request_login(body: RequestLoginBody) -> dict:
        session = service.orchestrator.request_login(
            body.user_id, body.service_provider, body.origin_device_descriptor
        )
        return _session_view(session)

    @app.get("/feed/{user_id}")
    def feed(user_id: str) -> dict:
        requests = service.orchestrator.approval_feed(user_id)
        return {
            "requests": [
                {
                    "session_id": r.session_id,
                    "service_provider": r.service_provider,
                    "origin_device_descriptor": r.origin_device_descriptor,
                    "requested_at_ms": r.requested_at,
                }
                for r in requests
            ]
        }

    @app.post("/advance")
    def advance(body: AdvanceBody) -> dict:
        step = LoginStep(body.step)
        if step is LoginStep.FACE:
            if body.probe_vector is None or body.probe_features is None:
                raise ValidationError("face step requires probe_vector and probe_features")
            evidence = FaceEvidence(
                probe_vector=body.probe_vector, probe_features=body.probe_features
            )
        else:
            if body.assertion is None or body.challenge_nonce is None:
                raise ValidationError(
                    f"step {step.value} requires assertion and challenge_nonce"
                )
            evidence = AssertionEvidence(
                challenge_nonce=_unb64(body.challenge_nonce, "challenge_nonce"),
                assertion=_parse_assertion(body.assertion),
                device_acknowledged=body.device_acknowledged,
            )
        result = service.orchestrator.advance(body.session_id, step, evidence)
        return {
            "ok": result.ok,
            "failure": result.failure.value if result.failure else None,
            "detail": result.detail,
            "session": _session_view(result.session),
        }

    @app.post("/deny")
    def deny(body: DenyBody) -> dict:
        return _session_view(service.orchestrator.deny(body.session_id))

    @app.get("/status/{session_id}")
    def status(session_id: str) -> dict:
        session = service.orchestrator.status(session_id)
        view = {"session_id": session.session_id, "state": session.state.value}
        if session.session_token is not None:
            view["session_token"] = {
                "token": session.session_token.token,
                "expires_at_ms": session.session_token.expires_at,
            }
        return view

    # -- device sync -------------------------------------------------------------

    @app.post("/device-sync")
    def device_sync(body: DeviceSyncBody) -> dict:
        return {"wipe_pending": service.server.consume_wipe_directive(body.device_id)}

    # -- admin portal --------------------------------------------------------------

    @app.get("/admin/credentials/{user_id}", dependencies=[Depends(require_admin)])
    def admin_list(user_id: str) -> dict:
        credentials = service.admin.list_credentials(user_id)
        return {"credentials": [_credential_view(c) for c in credentials]}

    @app.post("/admin/revoke", dependencies=[Depends(require_admin)])
    def admin_revoke(body: RevokeBody) -> dict:
        credential = service.admin.revoke_credential(body.credential_id)
        service.persist()
        return _credential_view(credential)

    @app.post("/admin/wipe", dependencies=[Depends(require_admin)])
    def admin_wipe(body: WipeBody) -> dict:
        wiped = service.admin.remote_wipe(body.device_id)
        service.persist()
        return {"device_id": body.device_id, "credentials_wiped": wiped}

    if console_dir:
        app.mount("/console", StaticFiles(directory=console_dir, html=True), name="console")

    return app


class EmbeddedServer:
    """uvicorn on a loopback port in a background thread (port 0 = ephemeral)."""

    def __init__(self, app: FastAPI, host: str = "127.0.0.1", port: int = 0):
        self._config = uvicorn.Config(app, host=host, port=port, log_level="warning")
        self._server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self, timeout_s: float = 10.0) -> str:
        self._thread.start()
        deadline = time.monotonic() + timeout_s
        while not self._server.started:
            if time.monotonic() > deadline or not self._thread.is_alive():
                raise RuntimeError("embedded server failed to start")
            time.sleep(0.01)
        sock = self._server.servers[0].sockets[0]
        host, port = sock.getsockname()[:2]
        return f"http://{host}:{port}"

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=5)
