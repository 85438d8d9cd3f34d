"""Exception hierarchy shared across the metasecure package."""

from __future__ import annotations


class MetasecureError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(MetasecureError):
    """An argument violates an operation's precondition."""


class GenerationError(MetasecureError):
    """The entropy source or key generator failed."""


class EncodingError(MetasecureError):
    """A payload or record could not be (de)serialized."""


# -- authenticator ----------------------------------------------------------

class DeviceWipedError(MetasecureError):
    """The authenticator has been wiped; it holds no usable credentials."""


class ChallengeExpiredError(MetasecureError):
    """The challenge is consumed or past its TTL."""


class ChallengeReusedError(MetasecureError):
    """The challenge was already consumed."""


class ChallengeUnknownError(MetasecureError):
    """No pending challenge matches the supplied nonce."""


class NoSuchCredentialError(MetasecureError):
    """No credential slot or record exists for the given id."""


class RpMismatchError(MetasecureError):
    """The requested relying-party id does not match the credential's."""


class BadSignatureError(MetasecureError):
    """Signature verification failed during a ceremony that raises."""


# -- relying-party server ---------------------------------------------------

class NoSuchUserError(MetasecureError):
    """The user id is not registered."""


class NoCredentialError(MetasecureError):
    """The user has no active credential for this relying party."""


class SessionNotReadyError(MetasecureError):
    """A token was requested for a login session that is not Complete."""


# -- key administration -----------------------------------------------------

class AlreadyTerminalError(MetasecureError):
    """The credential is already Revoked or Wiped."""


class NoSuchDeviceError(MetasecureError):
    """The device id was never seen by this server."""


# -- login orchestrator -----------------------------------------------------

class PrerequisiteError(MetasecureError):
    """A login was requested before all three layers were enrolled."""

    def __init__(self, missing_layer: str):
        super().__init__(f"missing enrollment for layer: {missing_layer}")
        self.missing_layer = missing_layer


class NoSuchSessionError(MetasecureError):
    """No login session exists for the given id."""


class OutOfOrderError(MetasecureError):
    """A step was submitted out of the required layer order."""


class SessionExpiredError(MetasecureError):
    """The login session passed its TTL."""


class SessionTerminalError(MetasecureError):
    """The login session already completed or was denied."""


# -- face verification ------------------------------------------------------

class NoTemplateError(MetasecureError):
    """The user has no enrolled face template."""


# -- benchmarking / transport ----------------------------------------------

class CalibrationError(MetasecureError):
    """The requested password-check cost cannot be reached on this host."""


class TransportError(MetasecureError):
    """The server could not be reached."""


class ApiError(MetasecureError):
    """The server rejected a request; carries the wire error code."""

    def __init__(self, code: str, message: str, status: int):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.status = status
