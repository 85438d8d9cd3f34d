"""Assembled application core: one object wiring server, face layer,
orchestrator, and admin service around a shared clock."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .clock import Clock, SystemClock
from .face_identity import FaceStore, FaceVerifier, PadClassifier
from .key_admin import AuditLog, KeyAdminService
from .orchestrator import DEFAULT_SESSION_TTL_MS, LoginOrchestrator
from .rp_server import DEFAULT_TOKEN_TTL_MS, RelyingPartyServer


@dataclass
class MetasecureService:
    server: RelyingPartyServer
    face_store: FaceStore
    face_verifier: FaceVerifier
    orchestrator: LoginOrchestrator
    admin: KeyAdminService
    state_file: Optional[Path] = None
    face_file: Optional[Path] = None

    @classmethod
    def create(
        cls,
        rp_id: str = "meta.example",
        clock: Optional[Clock] = None,
        challenge_ttl_ms: int = 120_000,
        session_ttl_ms: int = DEFAULT_SESSION_TTL_MS,
        token_ttl_ms: int = DEFAULT_TOKEN_TTL_MS,
        audit_log_path: Optional[str | Path] = None,
        state_file: Optional[str | Path] = None,
        face_file: Optional[str | Path] = None,
        pad_classifier: Optional[PadClassifier] = None,
    ) -> "MetasecureService":
        clock = clock or SystemClock()
        server = RelyingPartyServer(
            rp_id, clock=clock, challenge_ttl_ms=challenge_ttl_ms, token_ttl_ms=token_ttl_ms
        )
        face_store = FaceStore(clock=clock)
        face_verifier = FaceVerifier(face_store, classifier=pad_classifier)
        orchestrator = LoginOrchestrator(
            server, face_verifier, clock=clock, session_ttl_ms=session_ttl_ms
        )
        admin = KeyAdminService(server, audit_log=AuditLog(audit_log_path), clock=clock)
        service = cls(
            server=server,
            face_store=face_store,
            face_verifier=face_verifier,
            orchestrator=orchestrator,
            admin=admin,
            state_file=Path(state_file) if state_file else None,
            face_file=Path(face_file) if face_file else None,
        )
        if service.state_file and service.state_file.exists():
            server.load_state(service.state_file)
        if service.face_file and service.face_file.exists():
            face_store.load(service.face_file)
        return service

    def persist(self) -> None:
        if self.state_file:
            self.server.save_state(self.state_file)
        if self.face_file:
            self.face_store.save(self.face_file)

    def enroll_face(self, user_id: str, vector) -> None:
        """Enroll a template and mark the identity as face-enrolled."""
        self.server.require_user(user_id)
        template = self.face_store.enroll_template(user_id, vector)
        self.server.link_face_template(user_id, f"face:{template.enrolled_at}")
