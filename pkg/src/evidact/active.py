"""Uncertainty-guided active target labeling under domain shift.

The selector ranks unlabeled target inputs in two rounds: first keep the
kappa * b highest distribution-uncertainty candidates (inputs the source
model has little evidence about), then pick the b highest
data-uncertainty inputs among them (the most class-ambiguous of those).
Ties break toward the lower index and results are index-sorted, so
selection is a pure function of the scores.  Baselines share the same
interface: random, predictive-entropy, best-versus-second-best margin,
single-round variants of either uncertainty, and the reversed two-round
order.

``run_active_da`` wires this into training: it fits the evidential
objective, pauses at evenly spaced epochs to move a budgeted slice of
the unlabeled pool into the labeled pool via the label oracle, and
records per-step metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import DomainDataset
from .metrics import EceConfig, accuracy, expected_calibration_error
from .network import (
    MomentumState,
    TrainConfig,
    _steps_per_epoch,
    fit_epoch,
    forward,
    init_network,
    make_lr_schedule,
)
from .uncertainty import logits_to_alpha_batch, predict_batch, uncertainty_batch

__all__ = [
    "STRATEGY_KINDS",
    "QueryStrategy",
    "ScheduleConfig",
    "ActiveState",
    "LabelOracle",
    "Pools",
    "make_pools",
    "budget_schedule",
    "duc_select",
    "baseline_select",
    "select_for_strategy",
    "RunReport",
    "run_active_da",
]

STRATEGY_KINDS = (
    "duc_two_round",
    "duc_reversed",
    "random",
    "entropy",
    "margin_bvsb",
    "u_dis_only",
    "u_data_only",
)


@dataclass(frozen=True)
class QueryStrategy:
    """Which selector to run; kappa widens the first round of duc variants."""

    kind: str = "duc_two_round"
    kappa: int = 10

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"strategy must be one of {STRATEGY_KINDS}")
        if self.kappa < 1:
            raise ValueError("kappa must be at least 1")


@dataclass(frozen=True)
class ScheduleConfig:
    """Total labeling budget as a fraction of the target pool, spread
    over a number of selection steps."""

    budget_fraction: float = 0.05
    steps: int = 5

    def __post_init__(self):
        if not 0.0 <= self.budget_fraction <= 1.0:
            raise ValueError("budget_fraction must lie in [0, 1]")
        if self.steps < 1:
            raise ValueError("steps must be positive")


def budget_schedule(n_target: int, budget_fraction: float, steps: int) -> tuple[int, tuple[int, ...]]:
    """Total budget B = round(budget_fraction * n_target) split over steps.

    Each step gets floor(B / steps); the remainder lands on the final
    step.  B smaller than the number of steps cannot give every step a
    selection and is rejected.
    """
    if n_target < 1:
        raise ValueError("target pool must be non-empty")
    if not 0.0 < budget_fraction <= 1.0:
        raise ValueError("budget_fraction must lie in (0, 1]")
    if steps < 1:
        raise ValueError("steps must be positive")
    total = round(budget_fraction * n_target)
    if total < steps:
        raise ValueError(
            f"budget of {total} samples cannot cover {steps} selection steps"
        )
    base = total // steps
    sizes = [base] * steps
    sizes[-1] += total - base * steps
    return total, tuple(sizes)


def _top_by_score(scores: np.ndarray, candidates: np.ndarray, k: int) -> np.ndarray:
    """Highest-scoring candidate indices, ties to the lower index."""
    order = np.lexsort((candidates, -scores[candidates]))
    return candidates[order[:k]]


def duc_select(u_dis, u_data, kappa: int, b: int) -> np.ndarray:
    """Two-round selection: kappa * b by u_dis, then b of those by u_data.

    Scores are aligned arrays over the current unlabeled pool; the result
    holds positions into those arrays, sorted ascending.  Both rounds cap
    at the pool size, so kappa = 1 collapses to a pure u_dis ranking and
    a first round covering the pool collapses to a pure u_data ranking.
    """
    dis = np.asarray(u_dis, dtype=np.float64)
    dat = np.asarray(u_data, dtype=np.float64)
    if dis.shape != dat.shape or dis.ndim != 1:
        raise ValueError("u_dis and u_data must be aligned 1-D arrays")
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    if b < 0:
        raise ValueError("b must be non-negative")
    everyone = np.arange(dis.shape[0])
    shortlist = _top_by_score(dis, everyone, min(kappa * b, dis.shape[0]))
    chosen = _top_by_score(dat, shortlist, min(b, shortlist.shape[0]))
    return np.sort(chosen)


def _reversed_duc_select(u_dis, u_data, kappa: int, b: int) -> np.ndarray:
    """Two rounds with the opposite order: u_data first, then u_dis."""
    return duc_select(u_data, u_dis, kappa, b)


def baseline_select(kind: str, alpha, b: int, rng: np.random.Generator) -> np.ndarray:
    """Single-round reference selectors over a (n, C) concentration matrix.

    ``random`` draws uniformly without replacement from ``rng``; the rest
    rank a score with ties to the lower index.  Returns sorted positions.
    """
    arr = np.asarray(alpha, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D concentration matrix")
    n = arr.shape[0]
    k = min(b, n)
    if kind == "random":
        return np.sort(rng.choice(n, size=k, replace=False))
    if kind == "entropy":
        probs = arr / arr.sum(axis=1, keepdims=True)
        scores = -(probs * np.log(probs)).sum(axis=1)
    elif kind == "margin_bvsb":
        probs = arr / arr.sum(axis=1, keepdims=True)
        part = np.sort(probs, axis=1)
        # smallest gap between best and runner-up is the most ambiguous
        scores = -(part[:, -1] - part[:, -2])
    elif kind == "u_dis_only":
        scores = uncertainty_batch(arr)[0]
    elif kind == "u_data_only":
        scores = uncertainty_batch(arr)[1]
    else:
        raise ValueError(f"unknown baseline {kind!r}")
    return np.sort(_top_by_score(scores, np.arange(n), k))


def select_for_strategy(
    strategy: QueryStrategy, alpha, b: int, rng: np.random.Generator
) -> np.ndarray:
    """Dispatch any configured strategy; returns sorted pool positions."""
    if strategy.kind in ("duc_two_round", "duc_reversed"):
        u_dis, u_data, _ = uncertainty_batch(alpha)
        if strategy.kind == "duc_two_round":
            return duc_select(u_dis, u_data, strategy.kappa, b)
        return _reversed_duc_select(u_dis, u_data, strategy.kappa, b)
    return baseline_select(strategy.kind, alpha, b, rng)


class LabelOracle:
    """Hands out target labels only for explicitly queried indices."""

    def __init__(self, labels):
        self._labels = np.asarray(labels, dtype=np.int64).copy()

    def query(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self._labels.shape[0]):
            raise ValueError("oracle query outside the target pool")
        return self._labels[idx].copy()


@dataclass
class ActiveState:
    """Bookkeeping for the labeled/unlabeled split of the target pool."""

    labeled_ids: np.ndarray
    unlabeled_ids: np.ndarray
    total_budget: int
    step_sizes: tuple[int, ...]
    steps_done: int = 0

    def mark_labeled(self, ids: np.ndarray) -> None:
        ids = np.asarray(ids, dtype=np.int64)
        if not np.isin(ids, self.unlabeled_ids).all():
            raise ValueError("can only label currently unlabeled indices")
        if np.unique(ids).shape[0] != ids.shape[0]:
            raise ValueError("duplicate indices in one selection")
        self.labeled_ids = np.concatenate([self.labeled_ids, ids])
        keep = ~np.isin(self.unlabeled_ids, ids)
        self.unlabeled_ids = self.unlabeled_ids[keep]
        self.steps_done += 1


@dataclass
class Pools:
    """Source data plus the split target pool behind its label oracle.

    Selection code sees unlabeled target features only; labels enter
    through ``acquire``, which queries the oracle for chosen indices.
    """

    source: DomainDataset
    target_features: np.ndarray
    n_classes: int
    oracle: LabelOracle
    state: ActiveState
    labeled_labels: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=np.int64)
    )

    def unlabeled_features(self) -> np.ndarray:
        return self.target_features[self.state.unlabeled_ids]

    def labeled_target(self) -> tuple[np.ndarray, np.ndarray]:
        return self.target_features[self.state.labeled_ids], self.labeled_labels

    def acquire(self, ids: np.ndarray) -> np.ndarray:
        labels = self.oracle.query(ids)
        self.state.mark_labeled(ids)
        self.labeled_labels = np.concatenate([self.labeled_labels, labels])
        return labels


def make_pools(
    source: DomainDataset,
    target: DomainDataset,
    total_budget: int = 0,
    step_sizes: tuple[int, ...] = (),
) -> Pools:
    """Initial pools: all of the target unlabeled, labels withheld."""
    if source.n_features != target.n_features:
        raise ValueError("source and target feature widths differ")
    if source.n_classes != target.n_classes:
        raise ValueError("source and target class counts differ")
    state = ActiveState(
        labeled_ids=np.empty(0, dtype=np.int64),
        unlabeled_ids=np.arange(target.n_samples, dtype=np.int64),
        total_budget=int(total_budget),
        step_sizes=tuple(step_sizes),
    )
    return Pools(
        source=source,
        target_features=target.features,
        n_classes=target.n_classes,
        oracle=LabelOracle(target.labels),
        state=state,
    )


def _selection_epochs(epochs: int, steps: int) -> list[int]:
    """Evenly spaced interior epochs, e.g. 10, 20, ..., 50 for 60 and 5."""
    marks = [round(epochs * i / (steps + 1)) for i in range(1, steps + 1)]
    if len(set(marks)) != steps or marks[0] < 1:
        raise ValueError(
            f"{epochs} epochs cannot accommodate {steps} distinct selection steps"
        )
    return marks


def _domain_metrics(params, cfg: TrainConfig, X, y) -> dict:
    logits, _ = forward(params, X)
    alpha = logits_to_alpha_batch(logits, cfg.evidence)
    probs, preds = predict_batch(alpha)
    u_dis, u_data, _ = uncertainty_batch(alpha)
    return {
        "accuracy": accuracy(preds, y),
        "ece": expected_calibration_error(probs.max(axis=1), (preds == y).astype(float)),
        "mean_u_dis": float(u_dis.mean()),
        "mean_u_data": float(u_data.mean()),
    }


def _metrics_block(params, cfg, source: DomainDataset, target: DomainDataset) -> dict:
    src = _domain_metrics(params, cfg, source.features, source.labels)
    tgt = _domain_metrics(params, cfg, target.features, target.labels)
    return {
        "source_accuracy": src["accuracy"],
        "target_accuracy": tgt["accuracy"],
        "target_ece": tgt["ece"],
        "mean_u_dis": {"source": src["mean_u_dis"], "target": tgt["mean_u_dis"]},
        "mean_u_data": {"source": src["mean_u_data"], "target": tgt["mean_u_data"]},
    }


@dataclass
class RunReport:
    """Everything one adaptation run produced, JSON-ready via to_dict."""

    strategy: QueryStrategy
    schedule: ScheduleConfig
    total_budget: int
    step_sizes: tuple[int, ...]
    steps: list[dict]
    final: dict
    loss_history: list[float]

    def to_dict(self) -> dict:
        return {
            "report_version": 1,
            "strategy": {"kind": self.strategy.kind, "kappa": self.strategy.kappa},
            "schedule": {
                "budget_fraction": self.schedule.budget_fraction,
                "steps": self.schedule.steps,
            },
            "total_budget": self.total_budget,
            "step_sizes": list(self.step_sizes),
            "steps": self.steps,
            "final": self.final,
            "loss_history": self.loss_history,
        }


def run_active_da(
    source: DomainDataset,
    target: DomainDataset,
    cfg: TrainConfig,
    strategy: QueryStrategy = QueryStrategy(),
    schedule: ScheduleConfig = ScheduleConfig(),
):
    """Train with budgeted target labeling; returns (params, RunReport).

    A zero budget fraction degenerates to source-plus-unlabeled training
    with no selection records.  With a budget, selection runs at evenly
    spaced epochs; after the final epoch the labeled pool holds exactly
    the total budget.
    """
    if schedule.budget_fraction == 0.0:
        total_budget, step_sizes = 0, ()
    else:
        total_budget, step_sizes = budget_schedule(
            target.n_samples, schedule.budget_fraction, schedule.steps
        )
    marks = _selection_epochs(cfg.epochs, len(step_sizes)) if step_sizes else []
    pools = make_pools(source, target, total_budget, step_sizes)

    rng = np.random.default_rng(cfg.seed)
    select_rng = np.random.default_rng([cfg.seed, 1])
    params = init_network(
        (source.n_features, *cfg.hidden_sizes, source.n_classes), cfg.activation, rng
    )
    opt_state = MomentumState(params)
    lr_fn = make_lr_schedule(
        cfg, cfg.epochs * _steps_per_epoch(source.n_samples, cfg.batch_size)
    )

    step_records: list[dict] = []
    loss_history: list[float] = []
    global_step = 0
    next_mark = 0
    for epoch in range(1, cfg.epochs + 1):
        lt_X, lt_y = pools.labeled_target()
        stats = fit_epoch(
            params,
            opt_state,
            (source.features, source.labels),
            cfg,
            rng,
            labeled_target=(lt_X, lt_y),
            unlabeled_target=pools.unlabeled_features(),
            lr_fn=lr_fn,
            step_offset=global_step,
        )
        global_step += stats["steps"]
        loss_history.append(stats["mean_loss"])

        if next_mark < len(marks) and epoch == marks[next_mark]:
            logits, _ = forward(params, pools.unlabeled_features())
            alpha = logits_to_alpha_batch(logits, cfg.evidence)
            positions = select_for_strategy(
                strategy, alpha, step_sizes[next_mark], select_rng
            )
            ids = pools.state.unlabeled_ids[positions]
            pools.acquire(ids)
            record = {
                "step": next_mark + 1,
                "epoch": epoch,
                "n_labeled": int(pools.state.labeled_ids.shape[0]),
                "selected_ids": [int(i) for i in ids],
                **_metrics_block(params, cfg, source, target),
            }
            step_records.append(record)
            next_mark += 1

    final = _metrics_block(params, cfg, source, target)
    final["n_labeled"] = int(pools.state.labeled_ids.shape[0])
    report = RunReport(
        strategy=strategy,
        schedule=schedule,
        total_budget=total_budget,
        step_sizes=step_sizes,
        steps=step_records,
        final=final,
        loss_history=loss_history,
    )
    return params, report
