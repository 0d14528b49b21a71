"""Exception hierarchy. Every error carries a machine-readable ``code``."""

from __future__ import annotations


class SecondLookError(Exception):
    """Base class; ``code`` is the stable identifier used on the wire and in CLI output."""

    code = "internal-error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


class InputError(SecondLookError):
    """Bad user-supplied data (CLI exit code 2)."""

    code = "input-error"


class ProviderError(SecondLookError):
    """Detector/gate provider failure (CLI exit code 3)."""

    code = "provider-error"


class InvalidBoxError(InputError):
    code = "invalid-box"


class EmptyInputError(InputError):
    code = "empty-input"


class InvalidThresholdError(InputError):
    code = "invalid-threshold"


class MissingColumnError(InputError):
    code = "missing-column"


class NoAbnormalCasesError(InputError):
    code = "no-abnormal-cases"


class UnsuppressedInputError(InputError):
    code = "unsuppressed-input"


class UnknownImageError(InputError):
    code = "unknown-image"


class EmptyLedgerError(InputError):
    code = "empty-ledger"


class NoMatchesError(InputError):
    code = "no-matches"


class ProviderTimeoutError(ProviderError):
    code = "provider-timeout"


class SchemaViolationError(ProviderError):
    code = "schema-violation"


class InvalidConfigError(InputError):
    code = "invalid-config"


class UnknownSessionError(InputError):
    code = "unknown-session"


class UnknownReferralError(InputError):
    code = "unknown-referral"


class AlreadyDecidedError(InputError):
    code = "already-decided"


class VersionConflictError(InputError):
    code = "version-conflict"


class UnsupportedFormatError(InputError):
    code = "unsupported-format"
