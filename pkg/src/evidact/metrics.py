"""Evaluation metrics: accuracy, calibration, uncertainty summaries."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .uncertainty import UncertaintyReport

__all__ = [
    "EceConfig",
    "accuracy",
    "expected_calibration_error",
    "uncertainty_summary",
    "summarize_uncertainty_arrays",
    "write_histogram_csv",
]

LOG_U_DIS_FLOOR = 1e-12


@dataclass(frozen=True)
class EceConfig:
    """Equal-width confidence binning on [0, 1]."""

    n_bins: int = 10

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValueError("n_bins must be positive")


def accuracy(predictions, labels) -> float:
    """Fraction of matching entries; empty input is an error."""
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.shape != y.shape or p.ndim != 1:
        raise ValueError("predictions and labels must be 1-D and aligned")
    if p.size == 0:
        raise ValueError("cannot compute accuracy of an empty batch")
    return float((p == y).mean())


def expected_calibration_error(confidences, correct, cfg: EceConfig = EceConfig()) -> float:
    """Mean |bin accuracy - bin confidence| weighted by bin occupancy.

    ``confidences`` lie in [0, 1] (1.0 falls in the last bin);
    ``correct`` is the per-sample 0/1 outcome.
    """
    conf = np.asarray(confidences, dtype=np.float64)
    hit = np.asarray(correct, dtype=np.float64)
    if conf.shape != hit.shape or conf.ndim != 1:
        raise ValueError("confidences and correctness must be 1-D and aligned")
    if conf.size == 0:
        raise ValueError("cannot compute calibration of an empty batch")
    if (conf < 0.0).any() or (conf > 1.0).any():
        raise ValueError("confidences must lie in [0, 1]")
    if not np.isin(hit, (0.0, 1.0)).all():
        raise ValueError("correctness must be 0/1 valued")
    bins = np.minimum((conf * cfg.n_bins).astype(np.int64), cfg.n_bins - 1)
    ece = 0.0
    n = conf.shape[0]
    for b in range(cfg.n_bins):
        members = bins == b
        count = int(members.sum())
        if count == 0:
            continue
        ece += (count / n) * abs(hit[members].mean() - conf[members].mean())
    return float(ece)


def _quantile_block(values: np.ndarray) -> dict:
    deciles = np.quantile(values, np.arange(0.1, 1.0, 0.1))
    block = {"min": float(values.min()), "max": float(values.max()),
             "median": float(np.median(values))}
    for q, v in zip(range(10, 100, 10), deciles):
        block[f"p{q}"] = float(v)
    return block


def _histogram_block(values: np.ndarray, edges: np.ndarray) -> dict:
    counts, _ = np.histogram(values, bins=edges)
    return {
        "bin_left": [float(v) for v in edges[:-1]],
        "bin_right": [float(v) for v in edges[1:]],
        "count": [int(c) for c in counts],
    }


def _shared_edges(per_domain: dict[str, np.ndarray], n_bins: int) -> np.ndarray:
    lo = min(float(v.min()) for v in per_domain.values())
    hi = max(float(v.max()) for v in per_domain.values())
    if lo == hi:
        lo -= 0.5
        hi += 0.5
    return np.linspace(lo, hi, n_bins + 1)


def summarize_uncertainty_arrays(
    u_dis_by_domain: Mapping[str, np.ndarray],
    u_data_by_domain: Mapping[str, np.ndarray],
    n_bins: int = 20,
) -> dict:
    """Quantiles plus fixed-bin histograms of ln(u_dis) and u_data.

    u_dis is floored at ``LOG_U_DIS_FLOOR`` before the log, since trained
    models push it to zero on familiar inputs.  Histogram bin edges are
    shared across domains per quantity so the counts are comparable.
    """
    domains = list(u_dis_by_domain)
    if set(domains) != set(u_data_by_domain):
        raise ValueError("u_dis and u_data must cover the same domains")
    if not domains:
        raise ValueError("need at least one domain")
    log_u_dis = {
        d: np.log(np.maximum(np.asarray(u_dis_by_domain[d], dtype=np.float64), LOG_U_DIS_FLOOR))
        for d in domains
    }
    u_data = {d: np.asarray(u_data_by_domain[d], dtype=np.float64) for d in domains}
    for d in domains:
        if log_u_dis[d].size == 0 or u_data[d].size == 0:
            raise ValueError(f"domain {d!r} has no samples")
    dis_edges = _shared_edges(log_u_dis, n_bins)
    data_edges = _shared_edges(u_data, n_bins)
    out = {}
    for d in domains:
        out[d] = {
            "log_u_dis": {**_quantile_block(log_u_dis[d]),
                          "histogram": _histogram_block(log_u_dis[d], dis_edges)},
            "u_data": {**_quantile_block(u_data[d]),
                       "histogram": _histogram_block(u_data[d], data_edges)},
        }
    return out


def uncertainty_summary(
    reports_by_domain: Mapping[str, Sequence[UncertaintyReport]],
    n_bins: int = 20,
) -> dict:
    """Summary statistics from per-domain report sequences."""
    u_dis = {d: np.array([r.u_dis for r in rs]) for d, rs in reports_by_domain.items()}
    u_data = {d: np.array([r.u_data for r in rs]) for d, rs in reports_by_domain.items()}
    return summarize_uncertainty_arrays(u_dis, u_data, n_bins)


def write_histogram_csv(path, histogram: dict) -> None:
    """Write a histogram block as ``bin_left,bin_right,count`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "count"])
        for left, right, count in zip(
            histogram["bin_left"], histogram["bin_right"], histogram["count"]
        ):
            writer.writerow([repr(float(left)), repr(float(right)), int(count)])
