"""Verification metrics and linear score calibration.

Scores are read as natural-log likelihood ratios wherever a metric needs
a probabilistic reading (Cllr and its minimum).
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize
from sklearn.isotonic import isotonic_regression
from sklearn.metrics import roc_curve

from .exceptions import CalibrationFitError, MetricInputError
from .schemas import MetricReport
from .util import DEFAULT_C_FA, DEFAULT_C_MISS, DEFAULT_P_TARGET

LN2 = math.log(2.0)


def _as_scores(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise MetricInputError(f"{name} contain non-finite values")
    return arr


@dataclass(frozen=True, eq=False)
class ScoreSet:
    target_scores: np.ndarray
    nontarget_scores: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "target_scores", _as_scores(self.target_scores, "target scores"))
        object.__setattr__(self, "nontarget_scores", _as_scores(self.nontarget_scores, "non-target scores"))

    def require_both(self, minimum: int = 1) -> None:
        nt, nn = self.target_scores.size, self.nontarget_scores.size
        if nt < minimum or nn < minimum:
            raise MetricInputError(f"need at least {minimum} target and non-target scores, got {nt} and {nn}")

    def labelled(self) -> Tuple[np.ndarray, np.ndarray]:
        labels = np.concatenate([np.ones(self.target_scores.size), np.zeros(self.nontarget_scores.size)])
        return labels, np.concatenate([self.target_scores, self.nontarget_scores])


@dataclass(frozen=True)
class CalibrationTransform:
    slope: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.offset)):
            raise CalibrationFitError(f"non-finite calibration a={self.slope}, b={self.offset}")

    def apply(self, scores):
        if isinstance(scores, ScoreSet):
            return ScoreSet(self.apply(scores.target_scores), self.apply(scores.nontarget_scores))
        return self.slope * np.asarray(scores, dtype=float) + self.offset


# ─────────────── ROC convex hull ───────────────
def _pav_sorted(s: ScoreSet) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ideal posteriors sorted by score, their PAV fit and block widths.

    Ties put targets first so that PAV pools them with the tied non-targets.
    """
    labels, scores = s.labelled()
    order = np.argsort(scores, kind="stable")
    ideal = labels[order]
    fitted = isotonic_regression(ideal, increasing=True)
    boundaries = np.flatnonzero(np.diff(fitted)) + 1
    edges = np.concatenate([[0], boundaries, [fitted.size]])
    return ideal, fitted, np.diff(edges)


def rocch(s: ScoreSet) -> Tuple[np.ndarray, np.ndarray]:
    """(P_miss, P_fa) vertices of the ROC convex hull."""
    s.require_both()
    nt, nn = s.target_scores.size, s.nontarget_scores.size
    ideal, _, widths = _pav_sorted(s)
    pmiss = np.zeros(widths.size + 1)
    pfa = np.zeros(widths.size + 1)
    left, miss, fa = 0, 0.0, float(nn)
    for i, width in enumerate(widths):
        pmiss[i], pfa[i] = miss / nt, fa / nn
        left += width
        miss = ideal[:left].sum()
        fa = nt + nn - left - ideal[left:].sum()
    pmiss[-1], pfa[-1] = miss / nt, fa / nn
    return pmiss, pfa


def rocch_eer(s: ScoreSet) -> float:
    pmiss, pfa = rocch(s)
    eer = 0.0
    for i in range(pfa.size - 1):
        xy = np.array([[pfa[i], pmiss[i]], [pfa[i + 1], pmiss[i + 1]]])
        delta = xy[0] - xy[1]
        if np.min(np.abs(delta)) == 0:
            segment_eer = 0.0
        else:
            # line a*pfa + b*pmiss = 1 through both vertices meets pfa = pmiss at 1 / (a + b)
            segment_eer = 1.0 / np.sum(np.linalg.solve(xy, np.ones(2)))
        eer = max(eer, segment_eer)
    return float(eer)


# ─────────────── detection cost ───────────────
def _normalizer(p_target: float, c_miss: float, c_fa: float) -> float:
    if not 0 < p_target < 1 or c_miss <= 0 or c_fa <= 0:
        raise MetricInputError(f"invalid cost parameters p={p_target}, c_miss={c_miss}, c_fa={c_fa}")
    return min(p_target * c_miss, (1 - p_target) * c_fa)


def dcf_at_threshold(s: ScoreSet, threshold: float, p_target: float = DEFAULT_P_TARGET,
                     c_miss: float = DEFAULT_C_MISS, c_fa: float = DEFAULT_C_FA) -> float:
    """Normalized detection cost when accepting every score >= threshold."""
    s.require_both()
    norm = _normalizer(p_target, c_miss, c_fa)
    pmiss = float(np.mean(s.target_scores < threshold))
    pfa = float(np.mean(s.nontarget_scores >= threshold))
    return (p_target * c_miss * pmiss + (1 - p_target) * c_fa * pfa) / norm


def min_dcf(s: ScoreSet, p_target: float = DEFAULT_P_TARGET, c_miss: float = DEFAULT_C_MISS,
            c_fa: float = DEFAULT_C_FA) -> float:
    s.require_both()
    norm = _normalizer(p_target, c_miss, c_fa)
    labels, scores = s.labelled()
    fpr, tpr, _ = roc_curve(labels, scores, drop_intermediate=False)
    costs = p_target * c_miss * (1 - tpr) + (1 - p_target) * c_fa * fpr
    return float(np.min(costs) / norm)


def det_points(s: ScoreSet) -> List[Tuple[float, float, float]]:
    """(threshold, FNMR, FMR) for every distinct operating point."""
    s.require_both()
    labels, scores = s.labelled()
    fpr, tpr, thresholds = roc_curve(labels, scores, drop_intermediate=False)
    return [(float(t), float(1 - p), float(f)) for t, p, f in zip(thresholds, tpr, fpr)]


# ─────────────── log-likelihood-ratio cost ───────────────
def cllr(s: ScoreSet) -> float:
    s.require_both()
    miss = np.mean(np.logaddexp(0.0, -s.target_scores))
    false_alarm = np.mean(np.logaddexp(0.0, s.nontarget_scores))
    return float(0.5 * (miss + false_alarm) / LN2)


def optimal_llrs(s: ScoreSet) -> ScoreSet:
    """PAV-calibrated LLRs: the best monotone recalibration of the scores."""
    s.require_both()
    nt, nn = s.target_scores.size, s.nontarget_scores.size
    ideal, fitted, _ = _pav_sorted(s)
    fitted = np.clip(fitted, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        llrs = np.log(fitted) - np.log1p(-fitted) - math.log(nt / nn)
    return _split(ideal, llrs)


def _split(ideal: np.ndarray, llrs: np.ndarray) -> ScoreSet:
    # bypasses the finiteness check: PAV blocks with a pure class map to +/-inf
    out = object.__new__(ScoreSet)
    object.__setattr__(out, "target_scores", llrs[ideal == 1])
    object.__setattr__(out, "nontarget_scores", llrs[ideal == 0])
    return out


def min_cllr(s: ScoreSet) -> float:
    return cllr(optimal_llrs(s))


# ─────────────── calibration ───────────────
def fit_linear_calibration(dev: ScoreSet) -> CalibrationTransform:
    """Affine map a*s + b minimizing Cllr on the development scores."""
    try:
        dev.require_both(minimum=2)
    except MetricInputError as exc:
        raise CalibrationFitError(f"calibration needs both classes: {exc}") from exc

    tar, non = dev.target_scores, dev.nontarget_scores

    def objective(params: np.ndarray) -> float:
        a, b = params
        return 0.5 * (np.mean(np.logaddexp(0.0, -(a * tar + b))) + np.mean(np.logaddexp(0.0, a * non + b))) / LN2

    identity = objective(np.array([1.0, 0.0]))
    result = minimize(objective, x0=np.array([1.0, 0.0]), method="BFGS")
    if not np.all(np.isfinite(result.x)) or not result.fun <= identity:
        logging.warning(f"calibration fit did not improve on identity ({result.message}); keeping a=1, b=0")
        return CalibrationTransform()
    return CalibrationTransform(slope=float(result.x[0]), offset=float(result.x[1]))


def evaluate(scores: ScoreSet, p_target: float = DEFAULT_P_TARGET, c_miss: float = DEFAULT_C_MISS,
             c_fa: float = DEFAULT_C_FA, dev: Optional[ScoreSet] = None) -> MetricReport:
    """Full metric report, with a calibration fitted on ``dev`` when given."""
    report = MetricReport(
        targets=scores.target_scores.size,
        nontargets=scores.nontarget_scores.size,
        eer=rocch_eer(scores),
        min_dcf=min_dcf(scores, p_target, c_miss, c_fa),
        cllr=cllr(scores),
        min_cllr=min_cllr(scores),
        p_target=p_target,
        c_miss=c_miss,
        c_fa=c_fa,
    )
    if dev is not None:
        transform = fit_linear_calibration(dev)
        report.calibration = {"slope": transform.slope, "offset": transform.offset}
        report.calibrated_cllr = cllr(transform.apply(scores))
    return report
