"""Self-contained oracle checks for the numerical core.

Every check pits the implementation against an independent route:
Monte-Carlo sampling for the closed-form uncertainties, adaptive
quadrature for the Dirichlet KL, central finite differences for the
analytic gradients, and a pure-Python max-scan for the two-round
selection.  ``run_checks`` drives them all and is what the command-line
``verify`` subcommand prints.

The decomposition check deserves a note.  The additive split holds for
*any* function substituted for digamma when both parts share the same
digamma gap, so on top of the implementation identity it re-derives the
distribution uncertainty through the recurrence-shifted form
``entropy + sum(rho * psi(alpha)) - psi(alpha0) + (C-1)/alpha0``, whose
agreement with the shifted form does depend on digamma actually
satisfying ``psi(x+1) = psi(x) + 1/x``.  A multiplicative digamma fault
of 1e-3 (see ``run_checks(digamma_fault=...)``) leaves the first
residual at zero but moves the second far past its 1e-9 tolerance.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from . import uncertainty as _unc
from .active import _top_by_score, duc_select
from .dirichlet import digamma, sample_dirichlet_batch
from .losses import (
    LossWeights,
    dirichlet_kl_vs_uniform,
    kl_loss,
    loss_value_and_logit_gradients,
    total_loss_from_logits,
)
from .dirichlet import DirichletParams
from .network import backward, forward, init_network
from .uncertainty import perturbed_digamma, uncertainty_batch

__all__ = ["CheckResult", "run_checks", "CHECK_NAMES"]

CHECK_NAMES = (
    "decomposition_identity",
    "mc_uncertainty_agreement",
    "mc_expected_probs",
    "kl_vs_quadrature",
    "gradients_vs_finite_differences",
    "selection_brute_force",
)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one oracle check."""

    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str
    runtime_s: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}  {self.name:32s} measured {self.measured:.3e} "
            f"vs tolerance {self.tolerance:.3e}  ({self.detail}, {self.runtime_s:.2f}s)"
        )


def _log_uniform(rng: np.random.Generator, low: float, high: float, size) -> np.ndarray:
    return np.exp(rng.uniform(np.log(low), np.log(high), size=size))


# ---------------------------------------------------------------------------
# 1. decomposition identity


def check_decomposition(n_rows: int = 1000, tol: float = 1e-9, seed: int = 101) -> CheckResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    per_c = max(1, n_rows // 9)
    for c in range(2, 11):
        alpha = _log_uniform(rng, 0.1, 100.0, (per_c, c))
        u_dis, u_data, entropy = uncertainty_batch(alpha)
        worst = max(worst, float(np.abs(u_dis + u_data - entropy).max()))

        # recurrence-shifted route: only valid if psi(x+1) = psi(x) + 1/x
        alpha0 = alpha.sum(axis=1)
        probs = alpha / alpha0[:, None]
        u_dis_shifted = (
            -(probs * np.log(probs)).sum(axis=1)
            + (probs * _unc._psi(alpha)).sum(axis=1)
            - _unc._psi(alpha0)
            + (c - 1) / alpha0
        )
        worst = max(worst, float(np.abs(u_dis_shifted + u_data - entropy).max()))
    return CheckResult(
        "decomposition_identity",
        worst < tol,
        worst,
        tol,
        f"{9 * per_c} concentration rows, C in 2..10",
        time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# 2. Monte-Carlo agreement for both uncertainties


def check_mc_uncertainty(
    n_alpha: int = 50, n_draws: int = 200_000, seed: int = 203
) -> CheckResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_z = 0.0
    for i in range(n_alpha):
        c = int(rng.choice([2, 3, 5]))
        alpha = _log_uniform(rng, 0.1, 100.0, c)
        u_dis, u_data, _ = uncertainty_batch(alpha[None, :])
        draws = sample_dirichlet_batch(alpha, n_draws, rng)

        # per-draw estimators: h_i is iid for u_data; mi_i uses the exact
        # mean-probability vector so it stays iid and unbiased for u_dis
        plogp = np.where(draws > 0.0, draws * np.log(np.where(draws > 0.0, draws, 1.0)), 0.0)
        h = -plogp.sum(axis=1)
        log_mean = np.log(alpha / alpha.sum())
        mi = plogp.sum(axis=1) - (draws * log_mean).sum(axis=1)

        for closed, est in ((float(u_data[0]), h), (float(u_dis[0]), mi)):
            se = max(float(est.std(ddof=1)) / math.sqrt(n_draws), 1e-13)
            worst_z = max(worst_z, abs(closed - float(est.mean())) / se)
    return CheckResult(
        "mc_uncertainty_agreement",
        worst_z < 3.0,
        worst_z,
        3.0,
        f"{n_alpha} alphas x {n_draws} draws, worst z-score",
        time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# 3. sampler mean vs alpha / alpha0


def check_mc_expected_probs(
    n_alpha: int = 10, n_draws: int = 1_000_000, seed: int = 303
) -> CheckResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_z = 0.0
    for i in range(n_alpha):
        c = int(rng.integers(2, 7))
        alpha = _log_uniform(rng, 0.1, 100.0, c)
        draws = sample_dirichlet_batch(alpha, n_draws, rng)
        se = np.maximum(draws.std(axis=0, ddof=1) / math.sqrt(n_draws), 1e-13)
        z = np.abs(draws.mean(axis=0) - alpha / alpha.sum()) / se
        worst_z = max(worst_z, float(z.max()))
    return CheckResult(
        "mc_expected_probs",
        worst_z < 3.0,
        worst_z,
        3.0,
        f"{n_alpha} alphas x {n_draws} draws, worst per-class z-score",
        time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# 4. KL closed form vs adaptive quadrature (C = 2)


def _beta_kl_quadrature(a: float, b: float) -> float:
    # KL(Beta(a,b) || Uniform) = integral of p(x) ln p(x); the uniform
    # density is 1 on [0,1].  The normalizer uses math.lgamma so the
    # oracle never touches the package's own log-gamma.
    log_norm = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)

    def integrand(x: float) -> float:
        if x <= 0.0 or x >= 1.0:
            return 0.0
        log_p = log_norm + (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x)
        return math.exp(log_p) * log_p

    # concentrations below 1 put an integrable x^(a-1) ln x singularity at
    # an endpoint; quad converges but reports roundoff in its extrapolation
    # table, so the warning is muted and accuracy is policed by the 1e-6
    # comparison tolerance instead
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        value, _ = quad(integrand, 0.0, 1.0, epsabs=1e-10, epsrel=1e-10, limit=200)
    return value


def check_kl_quadrature(n_cases: int = 20, seed: int = 404) -> CheckResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    tol = 1e-6
    worst = 0.0
    detail = "kl_loss*C vs quadrature"

    # exact anchors first, both routes to 1e-9
    for alpha_tilde, expected in (((2.0, 1.0), math.log(2.0) - 0.5), ((3.0, 1.0), math.log(3.0) - 2.0 / 3.0)):
        closed = dirichlet_kl_vs_uniform(np.asarray(alpha_tilde))
        quad_val = _beta_kl_quadrature(*alpha_tilde)
        anchor_err = max(abs(closed - expected), abs(quad_val - expected))
        if anchor_err > 1e-9:
            return CheckResult(
                "kl_vs_quadrature",
                False,
                anchor_err,
                1e-9,
                f"analytic anchor {alpha_tilde} missed",
                time.perf_counter() - start,
            )

    for i in range(n_cases):
        alpha = _log_uniform(rng, 0.2, 50.0, 2)
        label = int(rng.integers(0, 2))
        alpha_tilde = alpha.copy()
        alpha_tilde[label] = 1.0
        impl = 2.0 * kl_loss(DirichletParams(alpha), label)
        oracle = _beta_kl_quadrature(alpha_tilde[0], alpha_tilde[1])
        worst = max(worst, abs(impl - oracle))
    return CheckResult(
        "kl_vs_quadrature",
        worst < tol,
        worst,
        tol,
        f"{n_cases} masked concentration pairs, {detail}",
        time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# 5. analytic gradients vs central finite differences


def _fd_tolerance_ratio(analytic: float, fd: float) -> float:
    # acceptance contract: |a - fd| <= 1e-4 |fd| + 1e-6, reported as a
    # ratio so 1.0 is the pass boundary
    return abs(analytic - fd) / (1e-4 * abs(fd) + 1e-6)


def _random_pools(rng: np.random.Generator, c: int):
    n_s = int(rng.integers(1, 6))
    n_l = int(rng.integers(1, 5))
    n_u = int(rng.integers(1, 7))
    z_s = rng.normal(0.0, 2.5, (n_s, c))
    z_l = rng.normal(0.0, 2.5, (n_l, c))
    z_u = rng.normal(0.0, 2.5, (n_u, c))
    y_s = rng.integers(0, c, n_s)
    y_l = rng.integers(0, c, n_l)
    return z_s, y_s, z_l, y_l, z_u


def _check_logit_case(rng: np.random.Generator, w: LossWeights) -> float:
    c = int(rng.integers(2, 7))
    z_s, y_s, z_l, y_l, z_u = _random_pools(rng, c)
    _, g_s, g_l, g_u = loss_value_and_logit_gradients(z_s, y_s, z_l, y_l, z_u, w)

    worst = 0.0
    pools = [(z_s, g_s), (z_l, g_l), (z_u, g_u)]
    for _ in range(4):
        which = int(rng.integers(0, 3))
        z, g = pools[which]
        i = int(rng.integers(0, z.shape[0]))
        j = int(rng.integers(0, z.shape[1]))
        h = 1e-5 * max(1.0, abs(z[i, j]))

        def value(delta: float) -> float:
            z_mod = [p[0].copy() for p in pools]
            z_mod[which][i, j] += delta
            return total_loss_from_logits(z_mod[0], y_s, z_mod[1], y_l, z_mod[2], w)

        fd = (value(h) - value(-h)) / (2.0 * h)
        worst = max(worst, _fd_tolerance_ratio(float(g[i, j]), fd))
    return worst


def _check_network_case(rng: np.random.Generator, w: LossWeights) -> float:
    c = 3
    activation = "relu" if rng.integers(0, 2) else "tanh"
    params = init_network((3, 4, c), activation, rng)
    z = [rng.normal(0.0, 1.5, (n, 3)) for n in (4, 3, 5)]
    x_s, x_l, x_u = z
    y_s = rng.integers(0, c, 4)
    y_l = rng.integers(0, c, 3)

    def loss_of(p) -> float:
        return total_loss_from_logits(
            forward(p, x_s)[0], y_s, forward(p, x_l)[0], y_l, forward(p, x_u)[0], w
        )

    z_s, cache_s = forward(params, x_s)
    z_l, cache_l = forward(params, x_l)
    z_u, cache_u = forward(params, x_u)
    _, g_s, g_l, g_u = loss_value_and_logit_gradients(z_s, y_s, z_l, y_l, z_u, w)
    grads = backward(params, cache_s, g_s)
    for cache, g in ((cache_l, g_l), (cache_u, g_u)):
        for layer, (dw, db) in enumerate(backward(params, cache, g)):
            grads[layer] = (grads[layer][0] + dw, grads[layer][1] + db)

    worst = 0.0
    for _ in range(6):
        layer = int(rng.integers(0, len(params.weights)))
        use_bias = bool(rng.integers(0, 2))
        target = params.biases[layer] if use_bias else params.weights[layer]
        flat = int(rng.integers(0, target.size))
        idx = np.unravel_index(flat, target.shape)
        h = 1e-5 * max(1.0, abs(float(target[idx])))

        analytic = float((grads[layer][1] if use_bias else grads[layer][0])[idx])
        original = float(target[idx])
        target[idx] = original + h
        up = loss_of(params)
        target[idx] = original - h
        down = loss_of(params)
        target[idx] = original
        worst = max(worst, _fd_tolerance_ratio(analytic, (up - down) / (2.0 * h)))
    return worst


def check_gradients(n_logit: int = 100, n_network: int = 20, seed: int = 505) -> CheckResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    w = LossWeights(beta=1.0, lam=0.05)
    worst = 0.0
    for _ in range(n_logit):
        worst = max(worst, _check_logit_case(rng, w))
    for _ in range(n_network):
        worst = max(worst, _check_network_case(rng, w))
    return CheckResult(
        "gradients_vs_finite_differences",
        worst < 1.0,
        worst,
        1.0,
        f"{n_logit} logit + {n_network} network configs, err/(1e-4|g|+1e-6)",
        time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# 6. selection brute force


def _reference_two_round(u_dis, u_data, kappa: int, b: int) -> list[int]:
    # exhaustive max-scan; pools stay ascending so a strict > comparison
    # resolves ties toward the lower index
    def take_top(scores, pool, k):
        pool = list(pool)
        chosen = []
        for _ in range(min(k, len(pool))):
            best = pool[0]
            for idx in pool:
                if scores[idx] > scores[best]:
                    best = idx
            chosen.append(best)
            pool.remove(best)
        return chosen

    shortlist = sorted(take_top(list(u_dis), range(len(u_dis)), kappa * b))
    return sorted(take_top(list(u_data), shortlist, b))


def check_selection(n_pools: int = 200, seed: int = 606) -> CheckResult:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    mismatches = 0
    for i in range(n_pools):
        n = int(rng.integers(5, 1001))
        if rng.integers(0, 2):
            u_dis = rng.normal(size=n)
            u_data = rng.normal(size=n)
        else:
            # heavy ties: a handful of score levels
            u_dis = rng.integers(0, 5, n).astype(np.float64)
            u_data = rng.integers(0, 4, n).astype(np.float64)
        kappa = int(rng.integers(1, 21))
        b = int(rng.integers(1, min(n, 50) + 1))

        got = duc_select(u_dis, u_data, kappa, b)
        want = _reference_two_round(u_dis, u_data, kappa, b)
        if not np.array_equal(got, np.asarray(want)):
            mismatches += 1
            continue

        # degeneracies: kappa=1 is a pure u_dis ranking; a shortlist
        # covering the pool is a pure u_data ranking
        everyone = np.arange(n)
        if not np.array_equal(
            duc_select(u_dis, u_data, 1, b), np.sort(_top_by_score(u_dis, everyone, b))
        ):
            mismatches += 1
        elif not np.array_equal(
            duc_select(u_dis, u_data, (n + b - 1) // b, b),
            np.sort(_top_by_score(u_data, everyone, b)),
        ):
            mismatches += 1
    return CheckResult(
        "selection_brute_force",
        mismatches == 0,
        float(mismatches),
        1.0,
        f"{n_pools} pools incl. tie-heavy scores and degeneracies",
        time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------


_LEVELS = {
    # counts: decomposition rows, mc alphas, mc draws, prob alphas,
    # prob draws, kl cases, logit cases, network cases, pools
    "full": (1000, 50, 200_000, 10, 1_000_000, 20, 100, 20, 200),
    "quick": (200, 12, 20_000, 4, 100_000, 8, 20, 6, 50),
}


def run_checks(level: str = "full", digamma_fault: float = 0.0) -> list[CheckResult]:
    """Run every oracle check and return the results in a fixed order.

    ``digamma_fault`` is a test-mode knob that scales digamma by
    ``1 + digamma_fault`` inside the uncertainty formulas; a value of
    1e-3 demonstrates that the recurrence-based decomposition residual
    catches a wrong digamma.
    """
    if level not in _LEVELS:
        raise ValueError(f"level must be one of {sorted(_LEVELS)}")
    d_rows, mc_a, mc_n, pr_a, pr_n, kl_n, g_l, g_n, pools = _LEVELS[level]

    def all_checks() -> list[CheckResult]:
        return [
            check_decomposition(d_rows),
            check_mc_uncertainty(mc_a, mc_n),
            check_mc_expected_probs(pr_a, pr_n),
            check_kl_quadrature(kl_n),
            check_gradients(g_l, g_n),
            check_selection(pools),
        ]

    if digamma_fault != 0.0:
        fault = float(digamma_fault)
        with perturbed_digamma(lambda x: digamma(x) * (1.0 + fault)):
            return all_checks()
    return all_checks()
