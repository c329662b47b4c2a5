"""Two-covariance (2Cov) generative comparator and feature preprocessing.

W and B are precision matrices (the within- and between-speaker covariances
are W^-1 and B^-1).
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ConditioningError, EstimationError, NormalizationError, ShapeError
from .linalg import as_plain_vector

REGULARIZATION = 1e-6


# ─────────────── data containers ───────────────
@dataclass(frozen=True, eq=False)
class LabeledCorpus:
    vectors: np.ndarray
    speaker_ids: Tuple[str, ...]

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=float)
        if vectors.ndim != 2:
            raise ShapeError(f"corpus vectors must be N x F, got shape {vectors.shape}")
        if vectors.shape[0] != len(self.speaker_ids):
            raise ShapeError(f"{vectors.shape[0]} vectors but {len(self.speaker_ids)} labels")
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "speaker_ids", tuple(str(s) for s in self.speaker_ids))

    @property
    def feature_dim(self) -> int:
        return self.vectors.shape[1]

    def speakers(self) -> List[str]:
        return sorted(set(self.speaker_ids))

    def by_speaker(self) -> Dict[str, np.ndarray]:
        labels = np.array(self.speaker_ids)
        return {s: self.vectors[labels == s] for s in self.speakers()}

    def map(self, fn) -> "LabeledCorpus":
        return LabeledCorpus(np.array([fn(v) for v in self.vectors]), self.speaker_ids)


@dataclass(frozen=True, eq=False)
class WhiteningTransform:
    mean: np.ndarray
    matrix: np.ndarray

    def apply(self, v) -> np.ndarray:
        v = as_plain_vector(v)
        if v.size != self.mean.size:
            raise ShapeError(f"whitening expects dimension {self.mean.size}, got {v.size}")
        return self.matrix @ (v - self.mean)


@dataclass(frozen=True, eq=False)
class TwoCovModel:
    W: np.ndarray
    B: np.ndarray
    mu: np.ndarray
    Lambda: np.ndarray
    Gamma: np.ndarray
    c: np.ndarray
    k: float
    k_tilde: float
    Lambda_tilde: np.ndarray
    Gamma_tilde: np.ndarray

    @property
    def feature_dim(self) -> int:
        return self.mu.size


# ─────────────── preprocessing ───────────────
def length_normalize(v) -> np.ndarray:
    v = as_plain_vector(v)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise NormalizationError("cannot length-normalize the zero vector")
    return v / norm


def _regularize(scatter: np.ndarray, name: str) -> np.ndarray:
    size = scatter.shape[0]
    trace = float(np.trace(scatter))
    if not np.isfinite(trace) or trace <= 0.0:
        rank = int(np.linalg.matrix_rank(scatter)) if np.all(np.isfinite(scatter)) else 0
        raise ConditioningError(
            f"{name} scatter is singular: rank {rank} of {size}, {size - rank} deficient dimensions"
        )
    return scatter + REGULARIZATION * trace / size * np.eye(size)


def _spd_inverse(matrix: np.ndarray, name: str) -> np.ndarray:
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"{name} is not positive definite") from exc
    return np.linalg.inv(matrix)


def whiten_fit(corpus: LabeledCorpus) -> WhiteningTransform:
    """Symmetric (ZCA) whitening: zero mean, identity covariance."""
    x = corpus.vectors
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / x.shape[0]
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        logging.info("sample covariance is singular; regularizing before whitening")
        cov = _regularize(cov, "sample")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ConditioningError("sample covariance stays singular after regularization") from exc
    eigvals, eigvecs = np.linalg.eigh(cov)
    matrix = eigvecs @ np.diag(1.0 / np.sqrt(eigvals)) @ eigvecs.T
    return WhiteningTransform(mean=mean, matrix=matrix)


def whiten_apply(transform: WhiteningTransform, v) -> np.ndarray:
    return transform.apply(v)


# ─────────────── training ───────────────
def estimate_covariances(corpus: LabeledCorpus) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ML estimates of the within/between precisions W, B and the global mean."""
    groups = corpus.by_speaker()
    if len(groups) < 2:
        raise EstimationError(f"need at least 2 speakers, got {len(groups)}")
    small = [s for s, rows in groups.items() if rows.shape[0] < 2]
    if small:
        raise EstimationError(f"speakers with fewer than 2 vectors: {small[:5]}")

    x = corpus.vectors
    mu = x.mean(axis=0)
    within = np.zeros((corpus.feature_dim, corpus.feature_dim))
    means = []
    for rows in groups.values():
        speaker_mean = rows.mean(axis=0)
        centered = rows - speaker_mean
        within += centered.T @ centered
        means.append(speaker_mean)
    within /= x.shape[0]
    means = np.array(means) - mu
    between = means.T @ means / len(means)

    W = _spd_inverse(_regularize(within, "within-class"), "within-class covariance")
    B = _spd_inverse(_regularize(between, "between-class"), "between-class covariance")
    return (W + W.T) / 2, (B + B.T) / 2, mu


def derive_hyperparameters(W, B, mu) -> TwoCovModel:
    W = np.asarray(W, dtype=float)
    B = np.asarray(B, dtype=float)
    mu = as_plain_vector(mu, "mu")
    if W.shape != B.shape or W.shape != (mu.size, mu.size):
        raise ShapeError(f"W {W.shape}, B {B.shape} and mu ({mu.size},) disagree")
    for name, m in (("W", W), ("B", B)):
        if not np.allclose(m, m.T, rtol=1e-9, atol=1e-12):
            raise ConditioningError(f"{name} is not symmetric")
        _spd_inverse(m, name)

    Lambda_tilde = np.linalg.inv(B + 2 * W)
    Gamma_tilde = np.linalg.inv(B + W)
    Lambda = 0.5 * W.T @ Lambda_tilde @ W
    Gamma = 0.5 * W.T @ (Lambda_tilde - Gamma_tilde) @ W
    B_mu = B @ mu
    c = W.T @ (Lambda_tilde - Gamma_tilde) @ B_mu

    logdet = {}
    for name, m in (("Gamma_tilde", Gamma_tilde), ("Lambda_tilde", Lambda_tilde), ("B", B)):
        sign, value = np.linalg.slogdet(m)
        if sign <= 0:
            raise ConditioningError(f"{name} has non-positive determinant")
        logdet[name] = value
    k_tilde = 2 * logdet["Gamma_tilde"] - logdet["Lambda_tilde"] - logdet["B"] + float(mu @ B_mu)
    k = k_tilde + 0.5 * float(B_mu @ (Lambda_tilde - 2 * Gamma_tilde) @ B_mu)
    return TwoCovModel(W=W, B=B, mu=mu, Lambda=Lambda, Gamma=Gamma, c=c, k=float(k),
                       k_tilde=float(k_tilde), Lambda_tilde=Lambda_tilde, Gamma_tilde=Gamma_tilde)


def train_two_cov(corpus: LabeledCorpus) -> TwoCovModel:
    return derive_hyperparameters(*estimate_covariances(corpus))


# ─────────────── scoring ───────────────
def _pair(model: TwoCovModel, X, Y) -> Tuple[np.ndarray, np.ndarray]:
    X = as_plain_vector(X, "X")
    Y = as_plain_vector(Y, "Y")
    if X.size != model.feature_dim or Y.size != model.feature_dim:
        raise ShapeError(f"model has F={model.feature_dim}, got X ({X.size},) and Y ({Y.size},)")
    return X, Y


def score_discriminative(model: TwoCovModel, X, Y) -> float:
    X, Y = _pair(model, X, Y)
    L, G = model.Lambda, model.Gamma
    return float(X @ L @ Y + Y @ L @ X + X @ G @ X + Y @ G @ Y)


def score_full(model: TwoCovModel, X, Y) -> float:
    X, Y = _pair(model, X, Y)
    return score_discriminative(model, X, Y) + float(model.c @ (X + Y)) + model.k


def enrolment_mean(vectors: Sequence) -> np.ndarray:
    """Averaged reference vector used as the template model."""
    arr = np.asarray(vectors, dtype=float)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ShapeError(f"enrolment needs an M x F array, got shape {arr.shape}")
    return arr.mean(axis=0)


# ─────────────── synthetic data ───────────────
def synthesize_corpus(feature_dim: int, n_speakers: int, per_speaker: int,
                      within_cov: Optional[np.ndarray] = None, between_cov: Optional[np.ndarray] = None,
                      mean: Optional[np.ndarray] = None, seed: Optional[int] = None) -> LabeledCorpus:
    """Sample from the generative model: latent ~ N(mu, B^-1), vector ~ latent + N(0, W^-1)."""
    rng = np.random.default_rng(seed)
    eye = np.eye(feature_dim)
    within_cov = eye if within_cov is None else np.asarray(within_cov, dtype=float)
    between_cov = eye if between_cov is None else np.asarray(between_cov, dtype=float)
    mean = np.zeros(feature_dim) if mean is None else as_plain_vector(mean, "mean")
    latents = rng.multivariate_normal(mean, between_cov, size=n_speakers)
    vectors, labels = [], []
    for s, latent in enumerate(latents):
        noise = rng.multivariate_normal(np.zeros(feature_dim), within_cov, size=per_speaker)
        vectors.append(latent + noise)
        labels.extend([f"spk{s:04d}"] * per_speaker)
    return LabeledCorpus(np.vstack(vectors), tuple(labels))
