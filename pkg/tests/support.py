"""Shared helpers for building enrolled users and evidence in tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from metasecure.authenticator import AuthenticatorDevice, DeviceKind
from metasecure.orchestrator import AssertionEvidence, FaceEvidence
from metasecure.rp_server import Credential
from metasecure.service import MetasecureService

LIVE_FEATURES = [0.1]
SPOOF_FEATURES = [0.9]


def register_device(service: MetasecureService, user_id: str, kind: DeviceKind):
    device = AuthenticatorDevice(kind, clock=service.server._clock)
    challenge = service.server.begin_registration(user_id)
    attestation = device.make_credential(challenge, service.server.rp_id, user_id)
    credential = service.server.finish_registration(attestation, challenge.nonce)
    return device, credential


@dataclass
class EnrolledUser:
    service: MetasecureService
    user_id: str
    phone: AuthenticatorDevice
    key: AuthenticatorDevice
    phone_credential: Credential
    key_credential: Credential
    face_vector: np.ndarray

    def assertion_evidence(
        self, device: AuthenticatorDevice, credential: Credential, acknowledged: bool = False
    ) -> AssertionEvidence:
        challenge = self.service.server.begin_authentication(self.user_id)
        assertion = device.get_assertion(
            challenge, self.service.server.rp_id, credential.credential_id
        )
        return AssertionEvidence(
            challenge_nonce=challenge.nonce, assertion=assertion, device_acknowledged=acknowledged
        )

    def phone_evidence(self) -> AssertionEvidence:
        return self.assertion_evidence(self.phone, self.phone_credential)

    def key_evidence(self, acknowledged: bool = True) -> AssertionEvidence:
        return self.assertion_evidence(self.key, self.key_credential, acknowledged)

    def face_evidence(self, features=None) -> FaceEvidence:
        return FaceEvidence(
            probe_vector=self.face_vector,
            probe_features=LIVE_FEATURES if features is None else features,
        )


def enroll_user(
    service: MetasecureService, email: str = "alice@example.com", face_seed: int = 7
) -> EnrolledUser:
    user = service.server.register_user(email, f"User {email.split('@')[0]}")
    phone, phone_credential = register_device(service, user.user_id, DeviceKind.SMARTPHONE)
    key, key_credential = register_device(service, user.user_id, DeviceKind.SECURITY_KEY)
    face_vector = np.random.default_rng(face_seed).normal(size=128)
    service.enroll_face(user.user_id, face_vector)
    return EnrolledUser(
        service=service,
        user_id=user.user_id,
        phone=phone,
        key=key,
        phone_credential=phone_credential,
        key_credential=key_credential,
        face_vector=face_vector,
    )
