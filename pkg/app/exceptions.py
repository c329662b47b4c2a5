"""Error hierarchy.

Every error carries a short machine-readable ``code`` and the process exit
status the CLI reports for it (1 usage, 2 data, 3 crypto).
"""

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CRYPTO = 3


class HESpeakerError(Exception):
    code = "E_GENERIC"
    exit_status = EXIT_DATA

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def __str__(self) -> str:
        return self.detail


# ─────────────── usage ───────────────
class UsageError(HESpeakerError):
    code = "E_USAGE"
    exit_status = EXIT_USAGE


class ConfigurationError(HESpeakerError):
    code = "E_CONFIG"
    exit_status = EXIT_USAGE


class FormatVersionError(HESpeakerError):
    code = "E_FORMAT_VERSION"
    exit_status = EXIT_USAGE


# ─────────────── data ───────────────
class ShapeError(HESpeakerError):
    code = "E_SHAPE"


class ConditioningError(HESpeakerError):
    code = "E_CONDITIONING"


class EstimationError(HESpeakerError):
    code = "E_ESTIMATION"


class NormalizationError(HESpeakerError):
    code = "E_NORMALIZATION"


class MetricInputError(HESpeakerError):
    code = "E_METRIC_INPUT"


class CalibrationFitError(HESpeakerError):
    code = "E_CALIBRATION_FIT"


class ReferenceNotFoundError(HESpeakerError):
    code = "E_REFERENCE_NOT_FOUND"


class KeyHygieneError(HESpeakerError):
    code = "E_KEY_HYGIENE"


class FileFormatError(HESpeakerError):
    code = "E_FILE_FORMAT"


# ─────────────── crypto ───────────────
class CryptoError(HESpeakerError):
    code = "E_CRYPTO"
    exit_status = EXIT_CRYPTO


class ParameterError(CryptoError):
    code = "E_PARAMETER"


class KeyGenerationError(CryptoError):
    code = "E_KEYGEN"


class PlaintextRangeError(CryptoError):
    code = "E_PLAINTEXT_RANGE"


class KeyMismatchError(CryptoError):
    code = "E_KEY_MISMATCH"


class CiphertextArithmeticError(CryptoError):
    code = "E_CIPHERTEXT_ARITHMETIC"


class EncodingMagnitudeError(CryptoError):
    code = "E_ENCODING_MAGNITUDE"


class EncodingDomainError(CryptoError):
    code = "E_ENCODING_DOMAIN"


class PlaintextOverflowError(CryptoError):
    code = "E_OVERFLOW"


class PrecisionOverflowError(CryptoError):
    code = "E_PRECISION_OVERFLOW"
