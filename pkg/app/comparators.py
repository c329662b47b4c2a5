"""Protected references and encrypted scoring for the four comparators.

Euclidean and cosine follow the classic single-key scheme. The 2Cov
comparator comes in two flavours: subject-protecting (one key pair, the
client holds plaintext Lambda and Gamma) and subject+vendor-protecting (two
key pairs, the model itself is encrypted under pk2).

Scores exclude the c'(X+Y) and k terms; ``add_calibration_offset`` adds
them back after decryption.
"""

import logging
import random
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .encoding import EncryptedNumber, add_encrypted, encrypt_number
from .exceptions import KeyMismatchError, ShapeError
from .linalg import (
    EncryptedMatrix,
    EncryptedVector,
    as_plain_matrix,
    as_plain_vector,
    decrypt_matrix,
    dot_exponentiate,
    encrypt_matrix,
    encrypt_vector,
    frobenius_exponentiate,
    hadamard,
    outer_exponentiate,
)
from .paillier import PaillierPublicKey, PaillierSecretKey
from .schemas import OpCounter
from .speaker import TwoCovModel, length_normalize


@dataclass(frozen=True)
class ProtectedReferenceEuclidean:
    sum_sq: EncryptedNumber
    elements: EncryptedVector

    @property
    def key_id(self) -> str:
        return self.elements.key_id

    @property
    def ciphertext_count(self) -> int:
        return len(self.elements) + 1


@dataclass(frozen=True)
class ProtectedReferenceCosine:
    elements: EncryptedVector

    @property
    def key_id(self) -> str:
        return self.elements.key_id

    @property
    def ciphertext_count(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class ProtectedReference2CovSubject:
    elements: EncryptedVector
    quad_term: EncryptedNumber

    @property
    def key_id(self) -> str:
        return self.elements.key_id

    @property
    def ciphertext_count(self) -> int:
        return len(self.elements) + 1


@dataclass(frozen=True)
class ProtectedReference2CovVendor:
    elements: EncryptedVector
    gram: EncryptedMatrix

    @property
    def key_id(self) -> str:
        return self.elements.key_id

    @property
    def ciphertext_count(self) -> int:
        return len(self.elements) + self.gram.size ** 2


@dataclass(frozen=True)
class EncryptedModel:
    Lambda_enc: EncryptedMatrix
    Gamma_enc: EncryptedMatrix

    @property
    def key_id(self) -> str:
        return self.Lambda_enc.key_id

    @property
    def ciphertext_count(self) -> int:
        return 2 * self.Lambda_enc.size ** 2


def _tally(counter: Optional[OpCounter], **amounts: int) -> None:
    if counter is not None:
        counter.tally(**amounts)


def _require_key(pk: PaillierPublicKey, key_id: str, what: str) -> None:
    if key_id != pk.key_id:
        raise KeyMismatchError(f"{what} is under key {key_id}, comparison uses key {pk.key_id}")


def _require_dim(expected: int, x: np.ndarray, what: str) -> None:
    if x.size != expected:
        raise ShapeError(f"{what}: reference has F={expected}, probe has F={x.size}")


def _unit(x: np.ndarray, who: str) -> np.ndarray:
    if abs(np.linalg.norm(x) - 1.0) > 1e-9:
        logging.info(f"{who} is not length-normalized; normalizing before cosine comparison")
        return length_normalize(x)
    return x


# client-side plaintext arithmetic, tallied for the complexity tables
def _plain_matvec(a: np.ndarray, x: np.ndarray, counter: Optional[OpCounter]) -> np.ndarray:
    size = x.size
    _tally(counter, plain_products=size * size, plain_additions=size * (size - 1))
    return a @ x


def _plain_dot(x: np.ndarray, y: np.ndarray, counter: Optional[OpCounter]) -> float:
    _tally(counter, plain_products=x.size, plain_additions=x.size - 1)
    return float(x @ y)


# ─────────────── enrolment ───────────────
def enroll_euclidean(pk: PaillierPublicKey, Y, rng: Optional[random.Random] = None,
                     counter: Optional[OpCounter] = None) -> ProtectedReferenceEuclidean:
    Y = as_plain_vector(Y, "reference")
    return ProtectedReferenceEuclidean(
        sum_sq=encrypt_number(pk, float(Y @ Y), rng=rng, counter=counter),
        elements=encrypt_vector(pk, Y, rng=rng, counter=counter),
    )


def enroll_cosine(pk: PaillierPublicKey, Y, rng: Optional[random.Random] = None,
                  counter: Optional[OpCounter] = None) -> ProtectedReferenceCosine:
    Y = _unit(as_plain_vector(Y, "reference"), "reference")
    return ProtectedReferenceCosine(elements=encrypt_vector(pk, Y, rng=rng, counter=counter))


def enroll_2cov_subject(pk: PaillierPublicKey, Gamma, Y, rng: Optional[random.Random] = None,
                        counter: Optional[OpCounter] = None) -> ProtectedReference2CovSubject:
    Y = as_plain_vector(Y, "reference")
    Gamma = as_plain_matrix(Gamma, "Gamma")
    _require_dim(Gamma.shape[0], Y, "enrolment")
    return ProtectedReference2CovSubject(
        elements=encrypt_vector(pk, Y, rng=rng, counter=counter),
        quad_term=encrypt_number(pk, float(Y @ Gamma @ Y), rng=rng, counter=counter),
    )


def enroll_2cov_vendor(pk1: PaillierPublicKey, Y, rng: Optional[random.Random] = None,
                       counter: Optional[OpCounter] = None) -> ProtectedReference2CovVendor:
    Y = as_plain_vector(Y, "reference")
    return ProtectedReference2CovVendor(
        elements=encrypt_vector(pk1, Y, rng=rng, counter=counter),
        gram=encrypt_matrix(pk1, np.outer(Y, Y), rng=rng, counter=counter),
    )


def enroll_model(pk2: PaillierPublicKey, model: TwoCovModel, rng: Optional[random.Random] = None,
                 counter: Optional[OpCounter] = None) -> EncryptedModel:
    """The vendor's protected hyper-parameters (stored in DB_vendor)."""
    return EncryptedModel(
        Lambda_enc=encrypt_matrix(pk2, model.Lambda, rng=rng, counter=counter),
        Gamma_enc=encrypt_matrix(pk2, model.Gamma, rng=rng, counter=counter),
    )


# ─────────────── encrypted scores ───────────────
def score_euclidean_encrypted(pk: PaillierPublicKey, ref: ProtectedReferenceEuclidean, X,
                              rng: Optional[random.Random] = None,
                              counter: Optional[OpCounter] = None) -> EncryptedNumber:
    """enc(sum x^2) * enc(sum y^2) * prod enc(y_f)^(-2 x_f): squared distance."""
    _require_key(pk, ref.key_id, "reference")
    X = as_plain_vector(X, "probe")
    _require_dim(len(ref.elements), X, "euclidean comparison")
    probe_sq = encrypt_number(pk, _plain_dot(X, X, counter), rng=rng, counter=counter)
    cross = dot_exponentiate(ref.elements, -2.0 * X, pk, counter=counter)
    score = add_encrypted(probe_sq, ref.sum_sq, pk, counter=counter)
    return add_encrypted(score, cross, pk, counter=counter)


def score_cosine_encrypted(pk: PaillierPublicKey, ref: ProtectedReferenceCosine, X,
                           counter: Optional[OpCounter] = None) -> EncryptedNumber:
    _require_key(pk, ref.key_id, "reference")
    X = _unit(as_plain_vector(X, "probe"), "probe")
    _require_dim(len(ref.elements), X, "cosine comparison")
    return dot_exponentiate(ref.elements, X, pk, counter=counter)


def score_2cov_subject_encrypted(pk: PaillierPublicKey, ref: ProtectedReference2CovSubject, X,
                                 Lambda, Gamma, rng: Optional[random.Random] = None,
                                 counter: Optional[OpCounter] = None) -> EncryptedNumber:
    """enc(X'GX) * enc(Y'GY) * enc(Y)^(LX) * enc(Y)^(X'L), the discriminative 2Cov score."""
    _require_key(pk, ref.key_id, "reference")
    X = as_plain_vector(X, "probe")
    _require_dim(len(ref.elements), X, "2cov comparison")
    Lambda = as_plain_matrix(Lambda, "Lambda")
    Gamma = as_plain_matrix(Gamma, "Gamma")
    _require_dim(Lambda.shape[0], X, "Lambda")

    lambda_x = _plain_matvec(Lambda, X, counter)
    x_lambda = _plain_matvec(Lambda.T, X, counter)
    quad = _plain_dot(X, _plain_matvec(Gamma, X, counter), counter)

    quad_enc = encrypt_number(pk, quad, rng=rng, counter=counter)
    term_3 = dot_exponentiate(ref.elements, lambda_x, pk, counter=counter)
    term_4 = dot_exponentiate(ref.elements, x_lambda, pk, counter=counter)
    score = add_encrypted(quad_enc, ref.quad_term, pk, counter=counter)
    score = add_encrypted(score, term_3, pk, counter=counter)
    return add_encrypted(score, term_4, pk, counter=counter)


def client_compute_vendor(pk1: PaillierPublicKey, ref: ProtectedReference2CovVendor, X,
                          rng: Optional[random.Random] = None,
                          counter: Optional[OpCounter] = None) -> Tuple[EncryptedMatrix, EncryptedMatrix]:
    """Auxiliary matrices enc(c1) = enc(XY' + YX') and enc(c2 + c3) = enc(XX' + YY')."""
    _require_key(pk1, ref.key_id, "reference")
    X = as_plain_vector(X, "probe")
    _require_dim(len(ref.elements), X, "2cov vendor comparison")
    y_x = outer_exponentiate(ref.elements, X, pk1, counter=counter)
    x_y = outer_exponentiate(ref.elements.T, X, pk1, counter=counter)
    c1 = hadamard(y_x, x_y, pk1, counter=counter)
    xx = encrypt_matrix(pk1, np.outer(X, X), rng=rng, counter=counter)
    c23 = hadamard(xx, ref.gram, pk1, counter=counter)
    return c1, c23


def operator_combine_vendor(sk1: PaillierSecretKey, pk1: PaillierPublicKey, pk2: PaillierPublicKey,
                            enc_model: EncryptedModel, c1: EncryptedMatrix, c23: EncryptedMatrix,
                            counter: Optional[OpCounter] = None) -> EncryptedNumber:
    """enc_pk2(<Lambda, c1> + <Gamma, c2 + c3>) computed by the operator."""
    _require_key(pk2, enc_model.key_id, "vendor model")
    _require_key(pk1, c1.key_id, "c1")
    _require_key(pk1, c23.key_id, "c2 + c3")
    if c1.shape != enc_model.Lambda_enc.shape or c23.shape != enc_model.Gamma_enc.shape:
        raise ShapeError(f"auxiliary matrices {c1.shape}/{c23.shape} vs model {enc_model.Lambda_enc.shape}")
    c1_plain = decrypt_matrix(sk1, pk1, c1, counter=counter)
    c23_plain = decrypt_matrix(sk1, pk1, c23, counter=counter)
    term_lambda = frobenius_exponentiate(enc_model.Lambda_enc, c1_plain, pk2, counter=counter)
    term_gamma = frobenius_exponentiate(enc_model.Gamma_enc, c23_plain, pk2, counter=counter)
    return add_encrypted(term_lambda, term_gamma, pk2, counter=counter)


def add_calibration_offset(score: float, model: TwoCovModel, x_plus_y=None) -> float:
    """Post-decryption k term, plus c'(X+Y) when the plaintext sum is available."""
    score = float(score) + model.k
    if x_plus_y is not None:
        score += float(model.c @ as_plain_vector(x_plus_y, "X + Y"))
    return score
