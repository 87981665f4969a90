"""Evidential head: logit-to-concentration map and uncertainty split.

A classifier's logits z parameterize a Dirichlet over class probabilities
through alpha = exp(clip(z)).  The predictive entropy of the mean
probabilities then splits exactly into two parts:

    distribution uncertainty (u_dis)
        mutual information between the label and the sampled probability
        vector; high when the per-class evidence conflicts, which is the
        signature of inputs far from the training distribution, and

    data uncertainty (u_data)
        expected entropy of the sampled probability vector; high for
        inputs near class boundaries.

Both are computed from digamma differences; ``u_dis + u_data`` equals the
entropy of the expected probabilities up to rounding.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .dirichlet import DirichletParams, SimplexPoint, digamma

__all__ = [
    "EvidenceMapConfig",
    "UncertaintyReport",
    "logits_to_alpha",
    "logits_to_alpha_batch",
    "distribution_uncertainty",
    "data_uncertainty",
    "total_entropy",
    "uncertainty_batch",
    "uncertainty_report",
    "uncertainty_reports_batch",
    "predict",
    "predict_batch",
]


@dataclass(frozen=True)
class EvidenceMapConfig:
    """How logits become Dirichlet concentrations.

    ``logit_clamp`` bounds the logits symmetrically before
    exponentiation, keeping alpha inside [exp(-clamp), exp(clamp)].
    """

    map_kind: str = "exponential"
    logit_clamp: float = 10.0

    def __post_init__(self):
        if self.map_kind != "exponential":
            raise ValueError(f"unknown evidence map {self.map_kind!r}")
        if not np.isfinite(self.logit_clamp) or self.logit_clamp <= 0.0:
            raise ValueError("logit_clamp must be a positive finite number")


DEFAULT_EVIDENCE_MAP = EvidenceMapConfig()

# Test hook used by the verification tooling to demonstrate that a wrong
# digamma is caught.  The additive decomposition survives any digamma
# substitution by construction (both parts share the same gap), so the
# checks that react are the Monte-Carlo agreement ones, whose sampling
# route never evaluates digamma.  Never set in production.
_digamma_override = None


@contextmanager
def perturbed_digamma(fn):
    """Temporarily replace the digamma used by the uncertainty formulas."""
    global _digamma_override
    previous = _digamma_override
    _digamma_override = fn
    try:
        yield
    finally:
        _digamma_override = previous


def _psi(x):
    if _digamma_override is not None:
        return _digamma_override(x)
    return digamma(x)


def logits_to_alpha_batch(logits, cfg: EvidenceMapConfig = DEFAULT_EVIDENCE_MAP) -> np.ndarray:
    """Map a (n, C) logit matrix to a concentration matrix."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] < 2:
        raise ValueError("expected a 2-D logit array with at least two columns")
    if z.size and not np.isfinite(z).all():
        raise ValueError("logits must be finite")
    return np.exp(np.clip(z, -cfg.logit_clamp, cfg.logit_clamp))


def logits_to_alpha(logits, cfg: EvidenceMapConfig = DEFAULT_EVIDENCE_MAP) -> DirichletParams:
    """Map one logit vector to Dirichlet parameters."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1:
        raise ValueError("expected a 1-D logit vector")
    return DirichletParams(logits_to_alpha_batch(z[None, :], cfg)[0])


def _alpha_matrix(alpha) -> np.ndarray:
    arr = np.asarray(alpha, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise ValueError("expected a 2-D concentration matrix")
    if arr.size and (not np.isfinite(arr).all() or (arr <= 0.0).any()):
        raise ValueError("concentrations must be strictly positive and finite")
    return arr


def uncertainty_batch(alpha):
    """Per-row (u_dis, u_data, entropy) for a (n, C) concentration matrix.

    Each quantity is evaluated from its own digamma/entropy expression;
    tiny negative rounding residues are floored at zero, which keeps the
    additive decomposition intact far below its 1e-9 contract.
    """
    arr = _alpha_matrix(alpha)
    if arr.shape[0] == 0:
        empty = np.empty(0, dtype=np.float64)
        return empty, empty.copy(), empty.copy()
    alpha0 = arr.sum(axis=1, keepdims=True)
    probs = arr / alpha0
    psi_total = _psi(alpha0 + 1.0)
    psi_each = _psi(arr + 1.0)
    entropy = -(probs * np.log(probs)).sum(axis=1)
    u_data = (probs * (psi_total - psi_each)).sum(axis=1)
    u_dis = (probs * (psi_each - psi_total)).sum(axis=1) + entropy
    return np.maximum(u_dis, 0.0), np.maximum(u_data, 0.0), entropy


def distribution_uncertainty(params: DirichletParams) -> float:
    """Mutual information between the label and the probability vector."""
    return float(uncertainty_batch(params.alpha[None, :])[0][0])


def data_uncertainty(params: DirichletParams) -> float:
    """Expected entropy of probability vectors drawn from Dir(alpha)."""
    return float(uncertainty_batch(params.alpha[None, :])[1][0])


def total_entropy(probs) -> float:
    """Shannon entropy of a probability vector, with 0 ln 0 = 0."""
    p = probs.rho if isinstance(probs, SimplexPoint) else np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("expected a 1-D probability vector")
    SimplexPoint(p)
    positive = p > 0.0
    return float(-(p[positive] * np.log(p[positive])).sum())


@dataclass(frozen=True)
class UncertaintyReport:
    """Uncertainty decomposition for one input."""

    u_dis: float
    u_data: float
    entropy: float
    probs: SimplexPoint

    def __post_init__(self):
        if self.u_dis < 0.0 or self.u_data < 0.0:
            raise ValueError("uncertainties must be non-negative")
        if abs(self.u_dis + self.u_data - self.entropy) > 1e-9:
            raise ValueError("u_dis + u_data must equal the total entropy")


def uncertainty_report(params: DirichletParams) -> UncertaintyReport:
    """Full decomposition for one concentration vector."""
    u_dis, u_data, entropy = uncertainty_batch(params.alpha[None, :])
    probs = SimplexPoint(params.alpha / params.alpha0)
    return UncertaintyReport(float(u_dis[0]), float(u_data[0]), float(entropy[0]), probs)


def uncertainty_reports_batch(alpha) -> list[UncertaintyReport]:
    """Decompositions for every row of a (n, C) concentration matrix."""
    arr = _alpha_matrix(alpha)
    u_dis, u_data, entropy = uncertainty_batch(arr)
    probs = arr / arr.sum(axis=1, keepdims=True)
    return [
        UncertaintyReport(float(u_dis[i]), float(u_data[i]), float(entropy[i]), SimplexPoint(probs[i]))
        for i in range(arr.shape[0])
    ]


def predict(params: DirichletParams) -> tuple[SimplexPoint, int]:
    """Expected probabilities and the argmax label (ties to lowest index)."""
    probs = params.alpha / params.alpha0
    return SimplexPoint(probs), int(np.argmax(probs))


def predict_batch(alpha) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise expected probabilities and argmax labels."""
    arr = _alpha_matrix(alpha)
    probs = arr / arr.sum(axis=1, keepdims=True)
    return probs, np.argmax(probs, axis=1)
