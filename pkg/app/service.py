"""Conversions between in-memory objects and their versioned file formats."""

import csv
import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from .comparators import (
    EncryptedModel,
    ProtectedReference2CovSubject,
    ProtectedReference2CovVendor,
    ProtectedReferenceCosine,
    ProtectedReferenceEuclidean,
)
from .encoding import EncryptedNumber
from .exceptions import FileFormatError, FormatVersionError, KeyMismatchError, UsageError
from .linalg import EncryptedMatrix, EncryptedVector
from .metrics import ScoreSet
from .models import ComparatorKind
from .paillier import Ciphertext, PaillierPublicKey, PaillierSecretKey, keypair_from_primes
from .schemas import (
    CorpusFile,
    EncryptedModelFile,
    EncryptedNumberRecord,
    ModelFile,
    PublicKeyFile,
    SecretKeyFile,
    TemplateFile,
)
from .speaker import LabeledCorpus, TwoCovModel, WhiteningTransform, derive_hyperparameters
from .util import FORMAT_VERSION

M = TypeVar("M", bound=BaseModel)
ProtectedReference = Union[ProtectedReferenceEuclidean, ProtectedReferenceCosine,
                           ProtectedReference2CovSubject, ProtectedReference2CovVendor]

REFERENCE_KINDS = {
    ProtectedReferenceEuclidean: ComparatorKind.EUCLIDEAN,
    ProtectedReferenceCosine: ComparatorKind.COSINE,
    ProtectedReference2CovSubject: ComparatorKind.TWO_COV_SUBJECT,
    ProtectedReference2CovVendor: ComparatorKind.TWO_COV_VENDOR,
}


def _hex(value: int) -> str:
    return format(value, "x")


def _int(value: str) -> int:
    return int(value, 16)


# ─────────────── generic file io ───────────────
def check_format_version(data: dict, source: str) -> None:
    found = str(data.get("format_version", ""))
    if found.split(".")[0] != FORMAT_VERSION.split(".")[0]:
        raise FormatVersionError(f"{source}: format version {found or 'missing'}, this build reads {FORMAT_VERSION}")


def parse_model(text: str, cls: Type[M], source: str = "<input>") -> M:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{source}: not valid JSON ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise FileFormatError(f"{source}: expected a JSON object")
    check_format_version(data, source)
    try:
        return cls.model_validate(data)
    except ValidationError as exc:
        raise FileFormatError(f"{source}: {exc.error_count()} invalid field(s) for {cls.__name__}") from exc


def read_model(path: Union[str, Path], cls: Type[M]) -> M:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"file not found: {path}")
    return parse_model(path.read_text(), cls, str(path))


def write_model(path: Union[str, Path], model: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2, by_alias=True) + "\n")
    logging.info(f"wrote {path}")
    return path


# ─────────────── keys ───────────────
def public_key_to_file(pk: PaillierPublicKey) -> PublicKeyFile:
    return PublicKeyFile(key_id=pk.key_id, bit_length=pk.bit_length, insecure=pk.insecure,
                         n=_hex(pk.n), g=_hex(pk.g))


def public_key_from_file(f: PublicKeyFile) -> PaillierPublicKey:
    pk = PaillierPublicKey(n=_int(f.n), g=_int(f.g))
    if pk.key_id != f.key_id:
        raise KeyMismatchError(f"public key file claims id {f.key_id}, modulus hashes to {pk.key_id}")
    return pk


def secret_key_to_file(sk: PaillierSecretKey, pk: PaillierPublicKey) -> SecretKeyFile:
    return SecretKeyFile(key_id=sk.key_id, bit_length=pk.bit_length, insecure=pk.insecure,
                         lam=_hex(sk.lam), mu=_hex(sk.mu), p=_hex(sk.p), q=_hex(sk.q))


def secret_key_from_file(f: SecretKeyFile) -> Tuple[PaillierPublicKey, PaillierSecretKey]:
    """Rebuild the pair from the stored primes and cross-check the stored values."""
    pk, sk = keypair_from_primes(_int(f.p), _int(f.q))
    if sk.key_id != f.key_id or sk.lam != _int(f.lam) or sk.mu != _int(f.mu):
        raise KeyMismatchError(f"secret key file {f.key_id} is inconsistent with its primes")
    return pk, sk


def key_paths(key_dir: Union[str, Path], name: str) -> Tuple[Path, Path]:
    key_dir = Path(key_dir)
    return key_dir / f"{name}.pub.json", key_dir / f"{name}.key.json"


def save_keypair(pk: PaillierPublicKey, sk: PaillierSecretKey, key_dir: Union[str, Path], name: str) -> Tuple[Path, Path]:
    pub_path, sec_path = key_paths(key_dir, name)
    write_model(pub_path, public_key_to_file(pk))
    write_model(sec_path, secret_key_to_file(sk, pk))
    return pub_path, sec_path


def load_public_key(key_dir: Union[str, Path], name: str) -> PaillierPublicKey:
    return public_key_from_file(read_model(key_paths(key_dir, name)[0], PublicKeyFile))


def load_keypair(key_dir: Union[str, Path], name: str) -> Tuple[PaillierPublicKey, PaillierSecretKey]:
    pk = load_public_key(key_dir, name)
    pk_from_secret, sk = secret_key_from_file(read_model(key_paths(key_dir, name)[1], SecretKeyFile))
    if pk_from_secret.key_id != pk.key_id:
        raise KeyMismatchError(f"{name}: public key {pk.key_id} and secret key {sk.key_id} differ")
    return pk, sk


# ─────────────── encrypted values ───────────────
def number_to_record(x: EncryptedNumber) -> EncryptedNumberRecord:
    return EncryptedNumberRecord(ciphertext=_hex(x.ciphertext.value), exponent=x.exponent, key_id=x.key_id)


def number_from_record(r: EncryptedNumberRecord) -> EncryptedNumber:
    return EncryptedNumber(ciphertext=Ciphertext(value=_int(r.ciphertext), key_id=r.key_id), exponent=r.exponent)


def matrix_to_records(a: EncryptedMatrix) -> List[List[EncryptedNumberRecord]]:
    return [[number_to_record(x) for x in row] for row in a.rows]


def matrix_from_records(rows: List[List[EncryptedNumberRecord]]) -> EncryptedMatrix:
    return EncryptedMatrix(tuple(tuple(number_from_record(r) for r in row) for row in rows))


def reference_to_file(ref: ProtectedReference, subject_id: str) -> TemplateFile:
    kind = REFERENCE_KINDS[type(ref)]
    return TemplateFile(
        comparator=kind,
        subject_id=subject_id,
        feature_dim=len(ref.elements),
        key_id=ref.key_id,
        elements=[number_to_record(x) for x in ref.elements],
        sum_sq=number_to_record(ref.sum_sq) if kind == ComparatorKind.EUCLIDEAN else None,
        quad_term=number_to_record(ref.quad_term) if kind == ComparatorKind.TWO_COV_SUBJECT else None,
        gram=matrix_to_records(ref.gram) if kind == ComparatorKind.TWO_COV_VENDOR else None,
    )


def reference_from_file(f: TemplateFile) -> ProtectedReference:
    elements = EncryptedVector(tuple(number_from_record(r) for r in f.elements))
    if len(elements) != f.feature_dim:
        raise FileFormatError(f"template for {f.subject_id}: F={f.feature_dim} but {len(elements)} elements")
    missing = {
        ComparatorKind.EUCLIDEAN: f.sum_sq is None,
        ComparatorKind.TWO_COV_SUBJECT: f.quad_term is None,
        ComparatorKind.TWO_COV_VENDOR: f.gram is None,
    }.get(f.comparator, False)
    if missing:
        raise FileFormatError(f"template for {f.subject_id}: {f.comparator.value} field missing")
    if f.comparator == ComparatorKind.EUCLIDEAN:
        return ProtectedReferenceEuclidean(sum_sq=number_from_record(f.sum_sq), elements=elements)
    if f.comparator == ComparatorKind.COSINE:
        return ProtectedReferenceCosine(elements=elements)
    if f.comparator == ComparatorKind.TWO_COV_SUBJECT:
        return ProtectedReference2CovSubject(elements=elements, quad_term=number_from_record(f.quad_term))
    return ProtectedReference2CovVendor(elements=elements, gram=matrix_from_records(f.gram))


def encrypted_model_to_file(enc_model: EncryptedModel) -> EncryptedModelFile:
    return EncryptedModelFile(
        feature_dim=enc_model.Lambda_enc.size,
        key_id=enc_model.key_id,
        lambda_matrix=matrix_to_records(enc_model.Lambda_enc),
        gamma_matrix=matrix_to_records(enc_model.Gamma_enc),
    )


def encrypted_model_from_file(f: EncryptedModelFile) -> EncryptedModel:
    enc_model = EncryptedModel(Lambda_enc=matrix_from_records(f.lambda_matrix),
                               Gamma_enc=matrix_from_records(f.gamma_matrix))
    if enc_model.Lambda_enc.size != f.feature_dim or enc_model.Gamma_enc.size != f.feature_dim:
        raise FileFormatError(f"encrypted model declares F={f.feature_dim}, matrices disagree")
    return enc_model


# ─────────────── plaintext model and corpus ───────────────
def _grid(a: np.ndarray) -> List[List[float]]:
    return [[float(v) for v in row] for row in a]


def model_to_file(model: TwoCovModel, whitening: Optional[WhiteningTransform] = None,
                  length_normalize: bool = False) -> ModelFile:
    return ModelFile(
        feature_dim=model.feature_dim,
        W=_grid(model.W),
        B=_grid(model.B),
        mu=[float(v) for v in model.mu],
        Lambda=_grid(model.Lambda),
        Gamma=_grid(model.Gamma),
        c=[float(v) for v in model.c],
        k=model.k,
        k_tilde=model.k_tilde,
        Lambda_tilde=_grid(model.Lambda_tilde),
        Gamma_tilde=_grid(model.Gamma_tilde),
        whiten_mean=None if whitening is None else [float(v) for v in whitening.mean],
        whiten_matrix=None if whitening is None else _grid(whitening.matrix),
        length_normalize=length_normalize,
    )


def model_from_file(f: ModelFile) -> Tuple[TwoCovModel, Optional[WhiteningTransform], bool]:
    """Derived fields are recomputed from W, B and mu; stored ones are only a cache."""
    model = derive_hyperparameters(np.array(f.W), np.array(f.B), np.array(f.mu))
    if model.feature_dim != f.feature_dim:
        raise FileFormatError(f"model declares F={f.feature_dim}, W/B/mu have F={model.feature_dim}")
    whitening = None
    if f.whiten_mean is not None and f.whiten_matrix is not None:
        whitening = WhiteningTransform(mean=np.array(f.whiten_mean), matrix=np.array(f.whiten_matrix))
    return model, whitening, f.length_normalize


def corpus_to_file(corpus: LabeledCorpus) -> CorpusFile:
    return CorpusFile(feature_dim=corpus.feature_dim, speaker_ids=list(corpus.speaker_ids),
                      vectors=_grid(corpus.vectors))


def corpus_from_file(f: CorpusFile) -> LabeledCorpus:
    corpus = LabeledCorpus(np.array(f.vectors, dtype=float), tuple(f.speaker_ids))
    if corpus.feature_dim != f.feature_dim:
        raise FileFormatError(f"corpus declares F={f.feature_dim}, vectors have F={corpus.feature_dim}")
    return corpus


# ─────────────── score and DET files ───────────────
def write_scores(path: Union[str, Path], rows: Iterable[Tuple[str, str, float]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial_id", "label", "score"])
        for trial_id, label, score in rows:
            writer.writerow([trial_id, label, repr(float(score))])
    return path


def read_scores(path: Union[str, Path]) -> ScoreSet:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"file not found: {path}")
    targets, nontargets = [], []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"label", "score"} <= set(reader.fieldnames):
            raise FileFormatError(f"{path}: expected columns trial_id,label,score")
        for line, row in enumerate(reader, start=2):
            try:
                score = float(row["score"])
            except (TypeError, ValueError) as exc:
                raise FileFormatError(f"{path}:{line}: score {row['score']!r} is not a number") from exc
            if row["label"] == "target":
                targets.append(score)
            elif row["label"] == "nontarget":
                nontargets.append(score)
            else:
                raise FileFormatError(f"{path}:{line}: label must be target or nontarget, got {row['label']!r}")
    return ScoreSet(np.array(targets), np.array(nontargets))


def write_det(path: Union[str, Path], points: Iterable[Tuple[float, float, float]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold", "fnmr", "fmr"])
        for threshold, fnmr, fmr in points:
            writer.writerow([repr(threshold), repr(fnmr), repr(fmr)])
    return path
