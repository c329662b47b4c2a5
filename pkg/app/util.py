import logging
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


# Runtime configuration

FORMAT_VERSION = "1.0"

DEFAULT_KEY_BITS = 2048  # key size of the evaluated deployment
INSECURE_KEY_BITS = 512  # anything below is tagged insecure in key files
MIN_KEY_BITS = 16
PRIME_RETRIES = 1000
PRIMALITY_ROUNDS = 64

ENCODING_BASE = 16
PRECISION_FLOOR = int(os.getenv("HE_SPEAKER_PRECISION_FLOOR", "-14"))
MAX_ALIGNMENT = int(os.getenv("HE_SPEAKER_MAX_ALIGNMENT", "64"))

# bytes of plaintext exponent metadata ledgered per ciphertext
EXPONENT_METADATA_BYTES = 4

DEFAULT_P_TARGET = 0.01
DEFAULT_C_MISS = 1.0
DEFAULT_C_FA = 1.0

DEFAULT_SPEAKERS = 20
DEFAULT_VECTORS_PER_SPEAKER = 20
DEFAULT_FEATURE_DIM = 16

DATABASE_URL = os.getenv("DATABASE_URL", "sqlite://")
LOG_LEVEL = os.getenv("HE_SPEAKER_LOG_LEVEL", "WARNING")


def default_key_dir() -> Path:
    return Path(os.getenv("HE_SPEAKER_KEY_DIR", "keys"))


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL.upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)-5.5s [%(name)s] %(message)s")
