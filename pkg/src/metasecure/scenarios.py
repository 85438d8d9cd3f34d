"""Executable attack and happy-path scenarios.

Each scenario drives the wire API with simulated authenticators and asserts a
specific expected outcome: the honest flow completes with a session token,
and every attack is stopped with its characteristic failure code. The
scenario suite is the executable form of the framework's security claims.
"""

from __future__ import annotations

import base64
import copy
import secrets
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .authenticator import AuthenticatorDevice, DeviceKind
from .client import MetasecureClient
from .errors import ValidationError
from .rp_server import Credential, CredentialState, RelyingPartyServer

LIVE_FEATURES = [0.1]
SPOOF_FEATURES = [0.9]


@dataclass
class ScenarioResult:
    name: str
    expected: str
    observed: str
    steps: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.expected == self.observed


@dataclass
class _Enrollment:
    user_id: str
    phone: AuthenticatorDevice
    key: AuthenticatorDevice
    phone_credential_id: str
    key_credential_id: str
    face_vector: np.ndarray


def _enroll(client: MetasecureClient, rng: np.random.Generator, steps: List[str]) -> _Enrollment:
    """Register a fresh user with a smartphone, a security key, and a face."""
    tag = secrets.token_hex(4)
    user = client.register_user(f"user-{tag}@example.com", f"Scenario User {tag}")
    user_id = user["user_id"]
    steps.append(f"registered user {user_id}")
    devices = {
        DeviceKind.SMARTPHONE: AuthenticatorDevice(DeviceKind.SMARTPHONE),
        DeviceKind.SECURITY_KEY: AuthenticatorDevice(DeviceKind.SECURITY_KEY),
    }
    credential_ids: Dict[DeviceKind, str] = {}
    for kind, device in devices.items():
        challenge = client.begin_registration(user_id)
        attestation = device.make_credential(challenge, challenge.rp_id, user_id)
        credential = client.finish_registration(attestation, challenge.nonce)
        credential_ids[kind] = credential["credential_id"]
        steps.append(f"enrolled {kind.value} credential {credential['credential_id'][:8]}")
    face_vector = rng.normal(size=128)
    client.enroll_face(user_id, face_vector)
    steps.append("enrolled face template")
    return _Enrollment(
        user_id=user_id,
        phone=devices[DeviceKind.SMARTPHONE],
        key=devices[DeviceKind.SECURITY_KEY],
        phone_credential_id=credential_ids[DeviceKind.SMARTPHONE],
        key_credential_id=credential_ids[DeviceKind.SECURITY_KEY],
        face_vector=face_vector,
    )


def _assert_step(
    client: MetasecureClient,
    enrollment: _Enrollment,
    session_id: str,
    step: str,
    device: AuthenticatorDevice,
    credential_id: str,
    acknowledged: bool = False,
) -> dict:
    challenge = client.begin_authentication(enrollment.user_id)
    assertion = device.get_assertion(challenge, challenge.rp_id, credential_id)
    return client.advance_assertion(
        session_id, step, assertion, challenge.nonce, device_acknowledged=acknowledged
    )


def _run_login(
    client: MetasecureClient,
    enrollment: _Enrollment,
    steps: List[str],
    face_features: List[float],
) -> dict:
    """Drive request-login through all three layers; returns the face StepResult."""
    session = client.request_login(enrollment.user_id, "vrworld.example", "cli@scenario")
    session_id = session["session_id"]
    steps.append(f"login requested, session {session_id[:8]} pending")
    result = _assert_step(
        client, enrollment, session_id, "device_attestation", enrollment.phone,
        enrollment.phone_credential_id,
    )
    steps.append(f"device attestation ok={result['ok']}")
    result = _assert_step(
        client, enrollment, session_id, "security_key", enrollment.key,
        enrollment.key_credential_id, acknowledged=True,
    )
    steps.append(f"security key ok={result['ok']}")
    result = client.advance_face(session_id, enrollment.face_vector, face_features)
    steps.append(f"face step ok={result['ok']}")
    return result


def scenario_honest_login(client: MetasecureClient, rng: np.random.Generator) -> ScenarioResult:
    steps: List[str] = []
    enrollment = _enroll(client, rng, steps)
    result = _run_login(client, enrollment, steps, LIVE_FEATURES)
    state = result["session"]["state"]
    status = client.status(result["session"]["session_id"])
    token = status.get("session_token", {}).get("token")
    token_valid = bool(token) and client.session_introspect(token).get("active", False)
    steps.append(f"status state={status['state']} token_valid={token_valid}")
    return ScenarioResult(
        name="HonestLogin",
        expected="complete token=valid",
        observed=f"{state} token={'valid' if token_valid else 'missing'}",
        steps=steps,
    )


def scenario_replay(client: MetasecureClient, rng: np.random.Generator) -> ScenarioResult:
    steps: List[str] = []
    enrollment = _enroll(client, rng, steps)
    challenge = client.begin_authentication(enrollment.user_id)
    assertion = enrollment.key.get_assertion(
        challenge, challenge.rp_id, enrollment.key_credential_id
    )
    first = client.finish_authentication(assertion, challenge.nonce)
    steps.append(f"first submission ok={first['ok']}")
    second = client.finish_authentication(assertion, challenge.nonce)
    steps.append(f"replayed submission failure={second['failure']}")
    return ScenarioResult(
        name="Replay",
        expected="ChallengeReused",
        observed=second["failure"] or "ok",
        steps=steps,
    )


def scenario_phishing_rp(client: MetasecureClient, rng: np.random.Generator) -> ScenarioResult:
    """An assertion bound to the real RP is verified at a look-alike server.

    The look-alike runs locally with a different rp_id and a copy of the
    credential record (the stolen-database model); its verification must fail
    on the RP hash inside the signed payload.
    """
    steps: List[str] = []
    enrollment = _enroll(client, rng, steps)
    record = next(
        c for c in client.admin_list(enrollment.user_id)
        if c["credential_id"] == enrollment.key_credential_id
    )
    evil = RelyingPartyServer("evil.example")
    evil.register_user("victim@evil.example", "Victim Copy", user_id=enrollment.user_id)
    evil.import_credential(
        Credential(
            credential_id=record["credential_id"],
            user_id=record["user_id"],
            rp_id="evil.example",
            public_key=base64.b64decode(record["public_key"]),
            kind=DeviceKind(record["kind"]),
            device_id=record["device_id"],
            counter_seen=record["counter_seen"],
            state=CredentialState(record["state"]),
            created_at=record["created_at_ms"],
        )
    )
    steps.append("credential record copied to evil.example look-alike")
    challenge = evil.begin_authentication(enrollment.user_id)
    # The authenticator signs for its registered rp_id; the look-alike's
    # challenge is embedded but the payload still carries the real RP hash.
    assertion = enrollment.key.get_assertion(
        challenge, client.healthz()["rp_id"], enrollment.key_credential_id
    )
    result = evil.finish_authentication(assertion, challenge.nonce)
    steps.append(f"verification at evil.example failure={result.failure}")
    return ScenarioResult(
        name="PhishingRp",
        expected="RpMismatch",
        observed=result.failure.value if result.failure else "ok",
        steps=steps,
    )


def scenario_cloned_key(client: MetasecureClient, rng: np.random.Generator) -> ScenarioResult:
    steps: List[str] = []
    enrollment = _enroll(client, rng, steps)
    for _ in range(3):
        challenge = client.begin_authentication(enrollment.user_id)
        assertion = enrollment.key.get_assertion(
            challenge, challenge.rp_id, enrollment.key_credential_id
        )
        client.finish_authentication(assertion, challenge.nonce)
    steps.append("3 honest assertions recorded")
    clone = copy.deepcopy(enrollment.key)
    steps.append("device state forked (cloned authenticator)")
    challenge = client.begin_authentication(enrollment.user_id)
    clone_assertion = clone.get_assertion(
        challenge, challenge.rp_id, enrollment.key_credential_id
    )
    clone_result = client.finish_authentication(clone_assertion, challenge.nonce)
    steps.append(f"clone asserts first ok={clone_result['ok']}")
    challenge = client.begin_authentication(enrollment.user_id)
    original_assertion = enrollment.key.get_assertion(
        challenge, challenge.rp_id, enrollment.key_credential_id
    )
    original_result = client.finish_authentication(original_assertion, challenge.nonce)
    steps.append(f"original asserts same counter failure={original_result['failure']}")
    return ScenarioResult(
        name="ClonedKey",
        expected="CounterRegression",
        observed=original_result["failure"] or "ok",
        steps=steps,
    )


def scenario_spoof_face(client: MetasecureClient, rng: np.random.Generator) -> ScenarioResult:
    steps: List[str] = []
    enrollment = _enroll(client, rng, steps)
    result = _run_login(client, enrollment, steps, SPOOF_FEATURES)
    observed = result["failure"] or "ok"
    if result["failure"] == "FaceRejected" and "pad=spoof" in (result["detail"] or ""):
        observed = "FaceRejected pad=spoof"
    steps.append(f"face step detail: {result['detail']}")
    return ScenarioResult(
        name="SpoofFace",
        expected="FaceRejected pad=spoof",
        observed=observed,
        steps=steps,
    )


def scenario_wiped_key(client: MetasecureClient, rng: np.random.Generator) -> ScenarioResult:
    """A compromised (pre-wipe) copy of the key stays locked out after the wipe."""
    steps: List[str] = []
    enrollment = _enroll(client, rng, steps)
    stolen = copy.deepcopy(enrollment.key)
    steps.append("attacker snapshots the key before the wipe")
    wipe = client.admin_wipe(enrollment.key.device_id)
    steps.append(f"remote wipe marked {wipe['credentials_wiped']} credential(s)")
    if client.device_sync(enrollment.key.device_id):
        enrollment.key.wipe()
        steps.append("device synced and wiped itself")
    challenge = client.begin_authentication(enrollment.user_id)  # phone still active
    assertion = stolen.get_assertion(challenge, challenge.rp_id, enrollment.key_credential_id)
    result = client.finish_authentication(assertion, challenge.nonce)
    observed = result["failure"] or "ok"
    steps.append(f"stolen copy authentication failure={observed}")
    return ScenarioResult(
        name="WipedKey",
        expected="CredentialInactive",
        observed=observed,
        steps=steps,
    )


SCENARIOS: Dict[str, Callable[[MetasecureClient, np.random.Generator], ScenarioResult]] = {
    "HonestLogin": scenario_honest_login,
    "Replay": scenario_replay,
    "PhishingRp": scenario_phishing_rp,
    "ClonedKey": scenario_cloned_key,
    "SpoofFace": scenario_spoof_face,
    "WipedKey": scenario_wiped_key,
}


def run_scenario(
    name: str, client: MetasecureClient, seed: Optional[int] = None
) -> ScenarioResult:
    if name not in SCENARIOS:
        raise ValidationError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    rng = np.random.default_rng(seed)
    return SCENARIOS[name](client, rng)


def run_all(client: MetasecureClient, seed: Optional[int] = None) -> List[ScenarioResult]:
    rng = np.random.default_rng(seed)
    return [fn(client, rng) for fn in SCENARIOS.values()]
