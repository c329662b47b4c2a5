"""Command-line entry point: ``python -m app.main <command> [flags]``."""

import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from .api import COMMANDS, run_command
from .exceptions import EXIT_USAGE, HESpeakerError, UsageError
from .models import ComparatorKind
from .schemas import RunConfig
from .util import (
    DEFAULT_C_FA,
    DEFAULT_C_MISS,
    DEFAULT_FEATURE_DIM,
    DEFAULT_KEY_BITS,
    DEFAULT_P_TARGET,
    DEFAULT_SPEAKERS,
    DEFAULT_VECTORS_PER_SPEAKER,
    configure_logging,
    default_key_dir,
)


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {UsageError.code}: {message}\n")
        sys.exit(EXIT_USAGE)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="Master seed; fixes keys, ciphertexts and transcripts")
    p.add_argument("--out-dir", default=".", help="Directory for output files")
    p.add_argument("--verbose", action="store_true", help="Log at DEBUG level")


def _keys(p: argparse.ArgumentParser) -> None:
    p.add_argument("--key-dir", default=str(default_key_dir()), help="Key directory (env HE_SPEAKER_KEY_DIR)")
    p.add_argument("--key-name", default="operator", help="Key pair held by the operator (pk/pk1)")
    p.add_argument("--vendor-key-name", default="vendor", help="Vendor key pair (pk2) for 2cov-vendor")


def _comparator(p: argparse.ArgumentParser) -> None:
    p.add_argument("--comparator", type=ComparatorKind, choices=list(ComparatorKind),
                   default=ComparatorKind.TWO_COV_SUBJECT, metavar="{" + ",".join(k.value for k in ComparatorKind) + "}",
                   help="Comparator and architecture")


def _corpus_shape(p: argparse.ArgumentParser) -> None:
    p.add_argument("--F", dest="feature_dim", type=int, default=DEFAULT_FEATURE_DIM, help="Feature dimension")
    p.add_argument("--speakers", type=int, default=DEFAULT_SPEAKERS, help="Synthetic speakers")
    p.add_argument("--per-speaker", type=int, default=DEFAULT_VECTORS_PER_SPEAKER, help="Vectors per speaker")
    p.add_argument("--within-var", type=float, default=0.5, help="Within-speaker variance (W^-1 = v I)")
    p.add_argument("--between-var", type=float, default=1.0, help="Between-speaker variance (B^-1 = v I)")


def _costs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p-target", type=float, default=DEFAULT_P_TARGET, help="Target prior for minDCF")
    p.add_argument("--c-miss", type=float, default=DEFAULT_C_MISS, help="Miss cost for minDCF")
    p.add_argument("--c-fa", type=float, default=DEFAULT_C_FA, help="False-alarm cost for minDCF")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="he-speaker", description="Homomorphically encrypted speaker verification")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(COMMANDS) + "}")

    p = sub.add_parser("keygen", help="Generate a Paillier key pair")
    _common(p)
    _keys(p)
    p.add_argument("--bits", type=int, default=DEFAULT_KEY_BITS, help="Modulus bit length")

    p = sub.add_parser("synth", help="Write a labelled synthetic corpus")
    _common(p)
    _corpus_shape(p)

    p = sub.add_parser("train", help="Fit a two-covariance model")
    _common(p)
    p.add_argument("--corpus", required=True, help="Corpus JSON")
    p.add_argument("--whiten", action="store_true", help="Fit and apply whitening first")
    p.add_argument("--length-norm", action="store_true", help="Length-normalize after whitening")

    p = sub.add_parser("enroll", help="Write a protected reference (and the vendor's encrypted model)")
    _common(p)
    _keys(p)
    _comparator(p)
    p.add_argument("--corpus", required=True, help="Corpus JSON holding the enrolment vectors")
    p.add_argument("--subject", required=True, help="Subject to enrol")
    p.add_argument("--model", help="Model JSON (required for 2cov comparators)")
    p.add_argument("--enroll-count", type=int, default=5, help="Vectors averaged into the reference")

    p = sub.add_parser("verify", help="Run one protected verification")
    _common(p)
    _keys(p)
    _comparator(p)
    p.add_argument("--template", required=True, help="Protected reference JSON")
    p.add_argument("--corpus", required=True, help="Corpus JSON holding the probe")
    p.add_argument("--subject", help="Speaker whose vector is the probe (default: the template's subject)")
    p.add_argument("--probe-index", type=int, default=0, help="Index of the probe among the speaker's vectors")
    p.add_argument("--model", help="Model JSON (required for 2cov comparators)")
    p.add_argument("--vendor-model", help="Encrypted vendor model JSON (2cov-vendor)")
    p.add_argument("--eta", type=float, default=0.0, help="Decision threshold")
    p.add_argument("--apply-offset", action="store_true", help="Add the model constant k after decryption")

    p = sub.add_parser("simulate", help="End-to-end synthetic trials with ledgers and counters")
    _common(p)
    _comparator(p)
    _corpus_shape(p)
    p.add_argument("--bits", type=int, default=DEFAULT_KEY_BITS, help="Modulus bit length")
    p.add_argument("--trials", type=int, default=20, help="Alternating genuine/impostor trials")
    p.add_argument("--enroll-count", type=int, default=5, help="Vectors averaged into each reference")
    p.add_argument("--eta", type=float, default=0.0, help="Decision threshold")
    p.add_argument("--apply-offset", action="store_true", help="Add the model constant k after decryption")

    p = sub.add_parser("complexity", help="Closed-form operation counts and sizes")
    _common(p)
    _comparator(p)
    p.add_argument("--F", dest="feature_dim", type=int, default=DEFAULT_FEATURE_DIM, help="Feature dimension")
    p.add_argument("--nu-kib", type=float, default=0.5, help="Ciphertext size in KiB (2n bits)")
    p.add_argument("--p-bits", type=int, default=64, help="Bits per plaintext feature")

    p = sub.add_parser("metrics", help="ROCCH-EER, minDCF, Cllr and calibration from score CSVs")
    _common(p)
    _costs(p)
    p.add_argument("--scores", required=True, help="Evaluation score CSV")
    p.add_argument("--dev-scores", help="Development score CSV for linear calibration")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    options = {k: v for k, v in vars(args).items() if k != "verbose"}
    try:
        config = RunConfig(**options)
        result = run_command(config)
    except ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        sys.stderr.write(f"error: {UsageError.code}: --{field.replace('_', '-')}: {first['msg']}\n")
        return EXIT_USAGE
    except HESpeakerError as exc:
        logging.debug(f"{args.command} failed with {exc.code}")
        sys.stderr.write(f"error: {exc.code}: {exc}\n")
        return exc.exit_status
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
