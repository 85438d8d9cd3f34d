"""httpx client speaking the documented wire schema.

Converts between domain objects and the JSON wire format so callers (CLI,
scenario runner, tests) work with the same types as the in-process API.
"""

from __future__ import annotations

import base64
from typing import List, Optional, Sequence

import httpx

from .authenticator import AssertionResponse, AttestationResponse
from .crypto_core import Challenge, ChallengePurpose, SignedPayload
from .errors import ApiError, TransportError


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


class MetasecureClient:
    def __init__(self, base_url: str, admin_token: Optional[str] = None, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.admin_token = admin_token
        self._http = httpx.Client(base_url=self.base_url, timeout=timeout)

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "MetasecureClient":
        return self

    def __exit__(self, *_exc) -> None:
        self.close()

    def _request(self, method: str, path: str, json_body: Optional[dict] = None, admin: bool = False) -> dict:
        headers = {}
        if admin:
            headers["Authorization"] = f"Bearer {self.admin_token}"
        try:
            response = self._http.request(method, path, json=json_body, headers=headers)
        except httpx.TransportError as exc:
            raise TransportError(f"server unreachable at {self.base_url}: {exc}") from exc
        if response.status_code >= 400:
            try:
                payload = response.json()
            except Exception:
                payload = {}
            code = payload.get("error", f"Http{response.status_code}")
            message = payload.get("message", payload.get("detail", response.text))
            raise ApiError(code, message, response.status_code)
        return response.json()

    # -- users / faces ------------------------------------------------------

    def register_user(self, email: str, display_name: str, user_id: Optional[str] = None) -> dict:
        body = {"email": email, "display_name": display_name, "user_id": user_id}
        return self._request("POST", "/users", body)

    def get_user(self, user_id: str) -> dict:
        return self._request("GET", f"/users/{user_id}")

    def enroll_face(self, user_id: str, vector: Sequence[float]) -> dict:
        return self._request("POST", "/enroll-face", {"user_id": user_id, "vector": list(vector)})

    # -- ceremonies ----------------------------------------------------------

    def _challenge(self, payload: dict) -> Challenge:
        return Challenge(
            nonce=base64.b64decode(payload["nonce"]),
            rp_id=payload["rp_id"],
            user_id=payload["user_id"],
            purpose=ChallengePurpose(payload["purpose"]),
            issued_at=payload["issued_at_ms"],
            ttl=payload["ttl_ms"],
        )

    def begin_registration(self, user_id: str) -> Challenge:
        return self._challenge(self._request("POST", "/begin-registration", {"user_id": user_id}))

    def finish_registration(self, attestation: AttestationResponse, challenge_nonce: bytes) -> dict:
        body = {
            "challenge_nonce": _b64(challenge_nonce),
            "attestation": {
                "credential_id": attestation.credential_id,
                "public_key": _b64(attestation.public_key),
                "device_id": attestation.device_id,
                "kind": attestation.kind.value,
                "signed_payload": _b64(attestation.signed_payload.to_bytes()),
                "signature": _b64(attestation.signature),
            },
        }
        return self._request("POST", "/finish-registration", body)

    def begin_authentication(self, user_id: str) -> Challenge:
        return self._challenge(self._request("POST", "/begin-authentication", {"user_id": user_id}))

    @staticmethod
    def _assertion_body(assertion: AssertionResponse) -> dict:
        return {
            "credential_id": assertion.credential_id,
            "signed_payload": _b64(assertion.signed_payload.to_bytes()),
            "signature": _b64(assertion.signature),
        }

    def finish_authentication(self, assertion: AssertionResponse, challenge_nonce: bytes) -> dict:
        body = {
            "challenge_nonce": _b64(challenge_nonce),
            "assertion": self._assertion_body(assertion),
        }
        return self._request("POST", "/finish-authentication", body)

    def session_introspect(self, token: str) -> dict:
        return self._request("POST", "/session-introspect", {"token": token})

    # -- login orchestration ---------------------------------------------------

    def request_login(self, user_id: str, service_provider: str, origin: str) -> dict:
        body = {
            "user_id": user_id,
            "service_provider": service_provider,
            "origin_device_descriptor": origin,
        }
        return self._request("POST", "/request-login", body)

    def feed(self, user_id: str) -> List[dict]:
        return self._request("GET", f"/feed/{user_id}")["requests"]

    def advance_assertion(
        self,
        session_id: str,
        step: str,
        assertion: AssertionResponse,
        challenge_nonce: bytes,
        device_acknowledged: bool = False,
    ) -> dict:
        body = {
            "session_id": session_id,
            "step": step,
            "challenge_nonce": _b64(challenge_nonce),
            "assertion": self._assertion_body(assertion),
            "device_acknowledged": device_acknowledged,
        }
        return self._request("POST", "/advance", body)

    def advance_face(
        self, session_id: str, probe_vector: Sequence[float], probe_features: Sequence[float]
    ) -> dict:
        body = {
            "session_id": session_id,
            "step": "face",
            "probe_vector": list(probe_vector),
            "probe_features": list(probe_features),
        }
        return self._request("POST", "/advance", body)

    def deny(self, session_id: str) -> dict:
        return self._request("POST", "/deny", {"session_id": session_id})

    def status(self, session_id: str) -> dict:
        return self._request("GET", f"/status/{session_id}")

    def device_sync(self, device_id: str) -> bool:
        return self._request("POST", "/device-sync", {"device_id": device_id})["wipe_pending"]

    def healthz(self) -> dict:
        return self._request("GET", "/healthz")

    # -- admin -----------------------------------------------------------------

    def admin_list(self, user_id: str) -> List[dict]:
        return self._request("GET", f"/admin/credentials/{user_id}", admin=True)["credentials"]

    def admin_revoke(self, credential_id: str) -> dict:
        return self._request("POST", "/admin/revoke", {"credential_id": credential_id}, admin=True)

    def admin_wipe(self, device_id: str) -> dict:
        return self._request("POST", "/admin/wipe", {"device_id": device_id}, admin=True)
