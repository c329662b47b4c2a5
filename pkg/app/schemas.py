from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from .models import ComparatorKind
from .util import (
    DEFAULT_C_FA,
    DEFAULT_C_MISS,
    DEFAULT_FEATURE_DIM,
    DEFAULT_KEY_BITS,
    DEFAULT_P_TARGET,
    FORMAT_VERSION,
)

Grid = List[List[float]]


# ─────────────── Operation tallies ───────────────
class OpCounter(BaseModel):
    encryptions: int = Field(0, ge=0, description="Paillier encryptions")
    decryptions: int = Field(0, ge=0, description="Paillier decryptions")
    ciphertext_products: int = Field(0, ge=0, description="Ciphertext multiplications (plaintext additions)")
    exponentiations: int = Field(0, ge=0, description="Ciphertext exponentiations by a plaintext factor")
    rescalings: int = Field(0, ge=0, description="Exponent alignments (ciphertext raised to 16^d)")
    plain_additions: int = Field(0, ge=0, description="Plaintext additions on the client side")
    plain_products: int = Field(0, ge=0, description="Plaintext products on the client side")

    def tally(self, **amounts: int) -> None:
        for name, amount in amounts.items():
            setattr(self, name, getattr(self, name) + amount)


# ─────────────── Key files ───────────────
class PublicKeyFile(BaseModel):
    format_version: str = Field(FORMAT_VERSION, description="File format version")
    kind: Literal["paillier-public"] = "paillier-public"
    key_id: str = Field(..., description="SHA-256 fingerprint prefix of n")
    bit_length: int = Field(..., description="Bits of the modulus n")
    insecure: bool = Field(..., description="True for keys below 512 bits")
    n: str = Field(..., description="Modulus, lowercase hex")
    g: str = Field(..., description="Generator, lowercase hex")


class SecretKeyFile(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    format_version: str = Field(FORMAT_VERSION, description="File format version")
    kind: Literal["paillier-secret"] = "paillier-secret"
    key_id: str = Field(..., description="Fingerprint of the matching public key")
    bit_length: int = Field(..., description="Bits of the modulus n")
    insecure: bool = Field(..., description="True for keys below 512 bits")
    lam: str = Field(..., alias="lambda", description="lcm(p-1, q-1), lowercase hex")
    mu: str = Field(..., description="Inverse of L(g^lambda mod n^2) mod n, lowercase hex")
    p: str = Field(..., description="First prime factor, lowercase hex")
    q: str = Field(..., description="Second prime factor, lowercase hex")


# ─────────────── Protected templates ───────────────
class EncryptedNumberRecord(BaseModel):
    ciphertext: str = Field(..., description="Ciphertext value, lowercase hex")
    exponent: int = Field(..., description="Plaintext base-16 exponent")
    key_id: str = Field(..., description="Key fingerprint")


class TemplateFile(BaseModel):
    format_version: str = Field(FORMAT_VERSION, description="File format version")
    comparator: ComparatorKind = Field(..., description="Comparator kind tag")
    subject_id: str = Field(..., description="Enrolled subject")
    feature_dim: int = Field(..., ge=1, description="Feature dimension F")
    key_id: str = Field(..., description="Fingerprint of the encrypting key")
    elements: List[EncryptedNumberRecord] = Field(..., description="enc(y_f), f = 1..F")
    sum_sq: Optional[EncryptedNumberRecord] = Field(None, description="enc(sum y_f^2), Euclidean only")
    quad_term: Optional[EncryptedNumberRecord] = Field(None, description="enc(Y' Gamma Y), 2cov-subject only")
    gram: Optional[List[List[EncryptedNumberRecord]]] = Field(None, description="enc(Y Y'), 2cov-vendor only")


class EncryptedModelFile(BaseModel):
    format_version: str = Field(FORMAT_VERSION, description="File format version")
    feature_dim: int = Field(..., ge=1, description="Feature dimension F")
    key_id: str = Field(..., description="Fingerprint of the vendor key pk2")
    lambda_matrix: List[List[EncryptedNumberRecord]] = Field(..., description="enc_pk2(Lambda)")
    gamma_matrix: List[List[EncryptedNumberRecord]] = Field(..., description="enc_pk2(Gamma)")


# ─────────────── Plaintext model and corpus ───────────────
class ModelFile(BaseModel):
    format_version: str = Field(FORMAT_VERSION, description="File format version")
    feature_dim: int = Field(..., ge=1, description="Feature dimension F")
    W: Grid = Field(..., description="Within-class precision, row-major")
    B: Grid = Field(..., description="Between-class precision, row-major")
    mu: List[float] = Field(..., description="Global mean")
    Lambda: Optional[Grid] = Field(None, description="Derived; recomputed when absent")
    Gamma: Optional[Grid] = None
    c: Optional[List[float]] = None
    k: Optional[float] = None
    k_tilde: Optional[float] = None
    Lambda_tilde: Optional[Grid] = None
    Gamma_tilde: Optional[Grid] = None
    whiten_mean: Optional[List[float]] = Field(None, description="Preprocessing: whitening mean")
    whiten_matrix: Optional[Grid] = Field(None, description="Preprocessing: whitening transform")
    length_normalize: bool = Field(False, description="Preprocessing: project onto the unit sphere")


class CorpusFile(BaseModel):
    format_version: str = Field(FORMAT_VERSION, description="File format version")
    feature_dim: int = Field(..., ge=1, description="Feature dimension F")
    speaker_ids: List[str] = Field(..., description="Label per vector")
    vectors: Grid = Field(..., description="N x F feature vectors")


# ─────────────── Protocol transcripts and reports ───────────────
class TranscriptEntry(BaseModel):
    step: str = Field(..., description="Protocol step label, e.g. '2a'")
    sender: str
    receiver: str
    ciphertext_count: int = Field(..., ge=0)
    protected_bytes: int = Field(..., ge=0, description="ciphertext_count * nu")
    metadata_bytes: int = Field(..., ge=0, description="Plaintext exponent metadata")
    payload_hash: str = Field(..., description="SHA-256 of the canonical payload")


class ComplexityReport(BaseModel):
    comparator: ComparatorKind
    feature_dim: int
    nu_bytes: float = Field(..., description="Bytes per ciphertext")
    p_bits: int = Field(..., description="Bits per plain feature")
    encryptions: int
    decryptions: int
    additions: int
    products: int
    exponentiations: int
    plain_template_bytes: float
    protected_template_bytes: float
    plain_model_bytes: float
    protected_model_bytes: float
    channel_ciphertexts: int
    channel_bytes: float
    formulas: Dict[str, str] = Field(default_factory=dict, description="Closed form per quantity")
    display: Dict[str, str] = Field(default_factory=dict, description="Sizes rendered in KiB / MiB")


class PreloadReport(BaseModel):
    feature_dim: int
    nu_bytes: float
    model_preloaded_bytes: float = Field(..., description="nu (3F^2 + F + 1)")
    model_and_templates_preloaded_bytes: float = Field(..., description="nu (2F^2 + 1)")
    display: Dict[str, str] = Field(default_factory=dict)


class RunSummary(BaseModel):
    comparator: ComparatorKind
    feature_dim: int
    score: float
    threshold: float
    accepted: bool
    channels: Dict[str, Dict[str, int]] = Field(default_factory=dict)
    total_ciphertexts: int
    total_protected_bytes: int
    counters: OpCounter
    closed_form: Optional[ComplexityReport] = None
    transcript_sha256: str


class MetricReport(BaseModel):
    targets: int
    nontargets: int
    eer: float = Field(..., description="ROCCH-EER")
    min_dcf: float
    cllr: float
    min_cllr: float
    p_target: float
    c_miss: float
    c_fa: float
    calibration: Optional[Dict[str, float]] = Field(None, description="Fitted slope/offset, if requested")
    calibrated_cllr: Optional[float] = None


# ─────────────── CLI configuration ───────────────
class RunConfig(BaseModel):
    command: str
    comparator: ComparatorKind = ComparatorKind.TWO_COV_SUBJECT
    feature_dim: int = Field(DEFAULT_FEATURE_DIM, ge=1)
    bits: int = DEFAULT_KEY_BITS
    seed: Optional[int] = None
    eta: float = 0.0
    out_dir: str = "."
    key_dir: str = "keys"
    key_name: str = "operator"
    vendor_key_name: str = "vendor"
    corpus: Optional[str] = None
    model: Optional[str] = None
    template: Optional[str] = None
    vendor_model: Optional[str] = None
    scores: Optional[str] = None
    dev_scores: Optional[str] = None
    subject: Optional[str] = None
    probe_index: int = 0
    enroll_count: int = Field(5, ge=1)
    speakers: int = Field(20, ge=2)
    per_speaker: int = Field(20, ge=2)
    within_var: float = Field(0.5, gt=0)
    between_var: float = Field(1.0, gt=0)
    trials: int = Field(20, ge=1)
    nu_kib: float = Field(0.5, gt=0)
    p_bits: int = Field(64, ge=1)
    whiten: bool = False
    length_norm: bool = False
    apply_offset: bool = False
    p_target: float = Field(DEFAULT_P_TARGET, gt=0, lt=1)
    c_miss: float = Field(DEFAULT_C_MISS, gt=0)
    c_fa: float = Field(DEFAULT_C_FA, gt=0)
