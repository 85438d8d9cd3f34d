"""Administrator surface for the credential lifecycle.

Listing, revocation, and remote wipe against the relying-party store. Every
state-changing call appends exactly one action record to an append-only audit
log; reads are not audited so the record count equals the mutation count.
"""

from __future__ import annotations

import json
import secrets
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional

from .authenticator import AuthenticatorDevice
from .clock import Clock, SystemClock
from .errors import AlreadyTerminalError, NoSuchCredentialError
from .rp_server import Credential, CredentialState, RelyingPartyServer


class AdminActionKind(str, Enum):
    REVOKE = "revoke"
    REMOTE_WIPE = "remote_wipe"
    LIST_KEYS = "list_keys"


@dataclass(frozen=True)
class AdminAction:
    action_id: str
    actor: str
    kind: AdminActionKind
    target: str
    timestamp: int


class AuditLog:
    """Append-only action trail; one JSON line per record when file-backed."""

    def __init__(self, path: Optional[str | Path] = None):
        self._path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._records: List[AdminAction] = []

    def append(self, action: AdminAction) -> None:
        with self._lock:
            self._records.append(action)
            if self._path is not None:
                line = json.dumps(
                    {
                        "action_id": action.action_id,
                        "actor": action.actor,
                        "kind": action.kind.value,
                        "target": action.target,
                        "timestamp": action.timestamp,
                    },
                    sort_keys=True,
                )
                with self._path.open("a", encoding="utf-8") as fh:
                    fh.write(line + "\n")

    @property
    def records(self) -> List[AdminAction]:
        with self._lock:
            return list(self._records)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


class KeyAdminService:
    """The online key-management portal's backend operations."""

    def __init__(
        self,
        server: RelyingPartyServer,
        audit_log: Optional[AuditLog] = None,
        actor: str = "admin",
        clock: Optional[Clock] = None,
    ):
        self.server = server
        # explicit None check: an empty AuditLog is falsy via __len__
        self.audit_log = audit_log if audit_log is not None else AuditLog()
        self.actor = actor
        self._clock = clock or SystemClock()

    def _record(self, kind: AdminActionKind, target: str) -> None:
        self.audit_log.append(
            AdminAction(
                action_id=secrets.token_hex(8),
                actor=self.actor,
                kind=kind,
                target=target,
                timestamp=self._clock.now_ms(),
            )
        )

    def list_credentials(self, user_id: str) -> List[Credential]:
        """All credentials for a user; carries no key material beyond public keys."""
        return self.server.credentials_for_user(user_id)

    def revoke_credential(self, credential_id: str) -> Credential:
        credential = self.server.credential(credential_id)
        if credential is None:
            raise NoSuchCredentialError(credential_id)
        if credential.state.terminal:
            raise AlreadyTerminalError(
                f"credential {credential_id} is already {credential.state.value}"
            )
        credential.state = CredentialState.REVOKED
        self._record(AdminActionKind.REVOKE, credential_id)
        return credential

    def remote_wipe(self, device_id: str) -> int:
        """Mark the device's credentials Wiped server-side and queue a device wipe.

        Server-side marking comes first so the lockout is immediate even if the
        device never reconnects; the device itself wipes on next contact.
        """
        wiped = self.server.mark_credentials_wiped(device_id)
        self._record(AdminActionKind.REMOTE_WIPE, device_id)
        return wiped

    def sync_device(self, device: AuthenticatorDevice) -> bool:
        """Device contact point: consume a pending wipe directive, if any."""
        if self.server.consume_wipe_directive(device.device_id):
            device.wipe()
            return True
        return False
