"""Dirichlet distribution primitives and special functions.

``log_gamma``, ``digamma`` and ``trigamma`` dispatch to the compiled
kernel backend when available (see ``evidact.backend``) and accept
scalars or arrays of strictly positive finite values.

The sampler is a Marsaglia-Tsang rejection sampler driven by an explicit
``numpy.random.Generator``.  It shares no code with the digamma-based
closed forms elsewhere in the package, which is what makes it usable as
an independent Monte-Carlo check on them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels

__all__ = [
    "DirichletParams",
    "SimplexPoint",
    "log_gamma",
    "digamma",
    "trigamma",
    "dirichlet_log_pdf",
    "expected_probs",
    "expected_probs_batch",
    "sample_dirichlet",
    "sample_dirichlet_batch",
    "standard_gamma",
]

SIMPLEX_SUM_TOL = 1e-9


def _special(fn, x):
    """Validate and reshape around a 1-D kernel function."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.size == 0:
        return arr.copy()
    if not np.isfinite(arr).all() or (arr <= 0.0).any():
        raise ValueError("argument must be strictly positive and finite")
    flat = np.ascontiguousarray(arr.reshape(-1))
    out = fn(flat).reshape(arr.shape)
    if arr.ndim == 0:
        return float(out)
    return out


def log_gamma(x):
    """Natural log of the gamma function for positive x."""
    return _special(kernels.log_gamma_arr, x)


def digamma(x):
    """Logarithmic derivative of the gamma function for positive x."""
    return _special(kernels.digamma_arr, x)


def trigamma(x):
    """Second logarithmic derivative of the gamma function for positive x."""
    return _special(kernels.trigamma_arr, x)


def _as_alpha_matrix(alpha):
    """Validate a (n, C) concentration matrix, C >= 2, entries > 0."""
    arr = np.asarray(alpha, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] < 2:
        raise ValueError("expected a 2-D array with at least two columns")
    if arr.size and (not np.isfinite(arr).all() or (arr <= 0.0).any()):
        raise ValueError("concentrations must be strictly positive and finite")
    return arr


@dataclass(frozen=True)
class DirichletParams:
    """Concentration vector of a Dirichlet distribution over C >= 2 classes."""

    alpha: np.ndarray

    def __post_init__(self):
        arr = np.array(self.alpha, dtype=np.float64, copy=True)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise ValueError("alpha must be a 1-D vector with at least two entries")
        if not np.isfinite(arr).all() or (arr <= 0.0).any():
            raise ValueError("alpha entries must be strictly positive and finite")
        arr.flags.writeable = False
        object.__setattr__(self, "alpha", arr)

    @property
    def n_classes(self) -> int:
        return int(self.alpha.shape[0])

    @property
    def alpha0(self) -> float:
        """Total concentration, the precision of the distribution."""
        return float(self.alpha.sum())

    @property
    def evidence(self) -> np.ndarray:
        """Per-class evidence, alpha - 1 floored at zero."""
        return np.maximum(self.alpha - 1.0, 0.0)


@dataclass(frozen=True)
class SimplexPoint:
    """A categorical probability vector: entries in [0, 1] summing to one."""

    rho: np.ndarray

    def __post_init__(self):
        arr = np.array(self.rho, dtype=np.float64, copy=True)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise ValueError("rho must be a 1-D vector with at least two entries")
        if not np.isfinite(arr).all() or (arr < 0.0).any() or (arr > 1.0).any():
            raise ValueError("rho entries must lie in [0, 1]")
        if abs(float(arr.sum()) - 1.0) > SIMPLEX_SUM_TOL:
            raise ValueError("rho must sum to one")
        arr.flags.writeable = False
        object.__setattr__(self, "rho", arr)

    @property
    def n_classes(self) -> int:
        return int(self.rho.shape[0])


def _as_rho(rho, n_classes):
    arr = rho.rho if isinstance(rho, SimplexPoint) else np.asarray(rho, dtype=np.float64)
    if arr.shape != (n_classes,):
        raise ValueError("rho length does not match the concentration vector")
    return arr


def dirichlet_log_pdf(params: DirichletParams, rho) -> float:
    """Log density of Dir(alpha) at a simplex point.

    Boundary points (any zero component whose concentration is not exactly
    one) return ``-inf``.  For concentrations above one that is the true
    limit of the log density; below one the density diverges instead, and
    ``-inf`` is kept as the documented out-of-domain sentinel.  Components
    with concentration exactly one contribute nothing, so zeros there are
    harmless.
    """
    a = params.alpha
    r = _as_rho(rho, params.n_classes)
    zero = r == 0.0
    if (zero & (a != 1.0)).any():
        return float("-inf")
    norm = float(log_gamma(params.alpha0) - log_gamma(a).sum())
    interior = ~zero
    return norm + float(((a[interior] - 1.0) * np.log(r[interior])).sum())


def expected_probs(params: DirichletParams) -> SimplexPoint:
    """Mean of the Dirichlet distribution, alpha / alpha0."""
    return SimplexPoint(params.alpha / params.alpha0)


def expected_probs_batch(alpha) -> np.ndarray:
    """Row-wise Dirichlet means for a (n, C) concentration matrix."""
    arr = _as_alpha_matrix(alpha)
    return arr / arr.sum(axis=1, keepdims=True)


def standard_gamma(shape, rng: np.random.Generator) -> np.ndarray:
    """Unit-scale gamma draws via Marsaglia-Tsang rejection.

    ``shape`` is a 1-D array of positive shape parameters.  Shapes below
    one are sampled at shape + 1 and corrected by U**(1/shape); for very
    small shapes the correction can underflow to zero, which matches the
    concentration of the distribution near zero.
    """
    a = np.asarray(shape, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError("shape parameters must form a 1-D array")
    if a.size == 0:
        return np.empty(0, dtype=np.float64)
    if not np.isfinite(a).all() or (a <= 0.0).any():
        raise ValueError("shape parameters must be strictly positive and finite")

    boosted = a < 1.0
    d = np.where(boosted, a + 1.0, a) - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty_like(d)
    pending = np.arange(a.shape[0])
    while pending.size:
        x = rng.standard_normal(pending.size)
        v = (1.0 + c[pending] * x) ** 3
        u = rng.random(pending.size)
        # log acceptance test; v <= 0 is always rejected
        safe_v = np.where(v > 0.0, v, 1.0)
        accept = (v > 0.0) & (
            np.log(u) < 0.5 * x * x + d[pending] * (1.0 - v + np.log(safe_v))
        )
        done = pending[accept]
        out[done] = d[done] * v[accept]
        pending = pending[~accept]
    if boosted.any():
        u = rng.random(int(boosted.sum()))
        out[boosted] *= u ** (1.0 / a[boosted])
    return out


def sample_dirichlet_batch(alpha, n_draws: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n_draws`` simplex points from Dir(alpha), one per row."""
    a = np.asarray(alpha, dtype=np.float64)
    if a.ndim != 1 or a.shape[0] < 2:
        raise ValueError("alpha must be a 1-D vector with at least two entries")
    if n_draws < 0:
        raise ValueError("n_draws must be non-negative")
    flat = standard_gamma(np.tile(a, n_draws), rng).reshape(n_draws, a.shape[0])
    totals = flat.sum(axis=1, keepdims=True)
    if (totals == 0.0).any():
        raise RuntimeError("all gamma draws underflowed for a row; alpha is too small")
    return flat / totals


def sample_dirichlet(params: DirichletParams, rng: np.random.Generator) -> SimplexPoint:
    """Draw one simplex point from Dir(alpha)."""
    return SimplexPoint(sample_dirichlet_batch(params.alpha, 1, rng)[0])
