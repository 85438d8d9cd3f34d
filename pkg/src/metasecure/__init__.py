"""Passwordless triple-layer authentication framework (desk-scale).

Challenge-response ceremonies with simulated FIDO2-style authenticators, a
relying-party/SSO server, PAD-gated face verification, key administration
with remote wipe, a strict login orchestrator, and a benchmark harness
comparing password-based and passwordless authentication.
"""

from .authenticator import AssertionResponse, AttestationResponse, AuthenticatorDevice, DeviceKind
from .crypto_core import (
    Challenge,
    ChallengePurpose,
    KeyPair,
    SignedPayload,
    generate_keypair,
    new_challenge,
    sign_payload,
    verify_signature,
)
from .face_identity import FaceDecision, FaceStore, FaceVerifier, PadClass, PadVerdict
from .orchestrator import AuthSession, LoginOrchestrator, LoginStep, SessionState
from .rp_server import (
    Credential,
    CredentialState,
    RelyingPartyServer,
    UserIdentity,
    VerificationFailure,
    VerificationResult,
)
from .service import MetasecureService

__version__ = "0.1.0"

__all__ = [
    "AssertionResponse",
    "AttestationResponse",
    "AuthSession",
    "AuthenticatorDevice",
    "Challenge",
    "ChallengePurpose",
    "Credential",
    "CredentialState",
    "DeviceKind",
    "FaceDecision",
    "FaceStore",
    "FaceVerifier",
    "KeyPair",
    "LoginOrchestrator",
    "LoginStep",
    "MetasecureService",
    "PadClass",
    "PadVerdict",
    "RelyingPartyServer",
    "SessionState",
    "SignedPayload",
    "UserIdentity",
    "VerificationFailure",
    "VerificationResult",
    "generate_keypair",
    "new_challenge",
    "sign_payload",
    "verify_signature",
    "__version__",
]
