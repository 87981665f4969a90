"""Fully connected classifier trained with SGD plus momentum.

Plain NumPy forward/backward.  The forward pass caches layer inputs and
pre-activations; ``backward`` turns a logit gradient into parameter
gradients, and the momentum update is

    v <- momentum * v + g
    theta <- theta - lr * v

Weights start uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from a seeded
generator, so a fixed seed reproduces the loss trajectory bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .losses import LossWeights, loss_value_and_logit_gradients
from .uncertainty import EvidenceMapConfig, logits_to_alpha_batch

__all__ = [
    "TrainConfig",
    "NetworkParams",
    "MomentumState",
    "init_network",
    "forward",
    "backward",
    "sgd_momentum_step",
    "backward_and_step",
    "make_lr_schedule",
    "fit_epoch",
    "train_source_only",
    "save_checkpoint",
    "load_checkpoint",
]

_ACTIVATIONS = ("relu", "tanh")
_LR_DECAYS = ("constant", "inverse")
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer, architecture and objective settings for one run."""

    hidden_sizes: tuple[int, ...] = (32,)
    activation: str = "relu"
    learning_rate: float = 0.05
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 60
    weights: LossWeights = field(default_factory=LossWeights)
    evidence: EvidenceMapConfig = field(default_factory=EvidenceMapConfig)
    lr_decay: str = "constant"
    lr_decay_gamma: float = 10.0
    lr_decay_power: float = 0.75
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden layer sizes must be positive")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}")
        if self.lr_decay not in _LR_DECAYS:
            raise ValueError(f"lr_decay must be one of {_LR_DECAYS}")
        if not np.isfinite(self.learning_rate) or self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive and finite")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if not np.isfinite(self.weight_decay) or self.weight_decay < 0.0:
            raise ValueError("weight_decay must be non-negative and finite")
        if self.lr_decay_gamma < 0.0 or self.lr_decay_power < 0.0:
            raise ValueError("lr decay parameters must be non-negative")

    def to_dict(self) -> dict:
        return {
            "hidden_sizes": list(self.hidden_sizes),
            "activation": self.activation,
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "beta": self.weights.beta,
            "lambda": self.weights.lam,
            "logit_clamp": self.evidence.logit_clamp,
            "lr_decay": self.lr_decay,
            "lr_decay_gamma": self.lr_decay_gamma,
            "lr_decay_power": self.lr_decay_power,
            "weight_decay": self.weight_decay,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {
            "hidden_sizes", "activation", "learning_rate", "momentum", "batch_size",
            "epochs", "beta", "lambda", "logit_clamp", "lr_decay", "lr_decay_gamma",
            "lr_decay_power", "weight_decay", "seed",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown training keys: {sorted(unknown)}")
        kwargs = {k: v for k, v in data.items() if k in known - {"beta", "lambda", "logit_clamp"}}
        if "hidden_sizes" in kwargs:
            kwargs["hidden_sizes"] = tuple(kwargs["hidden_sizes"])
        weights = LossWeights(
            beta=data.get("beta", LossWeights.beta), lam=data.get("lambda", LossWeights.lam)
        )
        evidence = EvidenceMapConfig(
            logit_clamp=data.get("logit_clamp", EvidenceMapConfig.logit_clamp)
        )
        return cls(weights=weights, evidence=evidence, **kwargs)


class NetworkParams:
    """Layer weights and biases plus the hidden activation name."""

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray], activation: str):
        if len(weights) != len(biases) or not weights:
            raise ValueError("weights and biases must be non-empty and aligned")
        if activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}")
        for w, b in zip(weights, biases):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError("each bias must match its weight's output width")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.activation = activation

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0], *(w.shape[1] for w in self.weights))

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.activation
        )


def init_network(layer_sizes, activation: str, rng: np.random.Generator) -> NetworkParams:
    """Uniform fan-in initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValueError("layer_sizes needs at least input and output widths, all positive")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return NetworkParams(weights, biases, activation)


def _act(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(pre, 0.0)
    return np.tanh(pre)


def _act_grad(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (pre > 0.0).astype(np.float64)
    t = np.tanh(pre)
    return 1.0 - t * t


def forward(params: NetworkParams, X) -> tuple[np.ndarray, list]:
    """Logits for a (n, d) batch plus the cache needed by ``backward``.

    Hidden layers apply the configured activation; the output layer is
    identity, so the returned array is raw logits.
    """
    h = np.asarray(X, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != params.weights[0].shape[0]:
        raise ValueError("input features do not match the network's input width")
    cache = []
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        pre = h @ w + b
        cache.append((h, pre))
        h = pre if i == last else _act(pre, params.activation)
    return h, cache


def backward(params: NetworkParams, cache: list, dlogits) -> list[tuple[np.ndarray, np.ndarray]]:
    """Parameter gradients from a gradient on the logits."""
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(params.weights)
    delta = np.asarray(dlogits, dtype=np.float64)
    for i in range(len(params.weights) - 1, -1, -1):
        layer_in, pre = cache[i]
        if i < len(params.weights) - 1:
            delta = delta * _act_grad(pre, params.activation)
        grads[i] = (layer_in.T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = delta @ params.weights[i].T
    return grads


class MomentumState:
    """Velocity buffers matching a network's parameters."""

    def __init__(self, params: NetworkParams):
        self.w_vel = [np.zeros_like(w) for w in params.weights]
        self.b_vel = [np.zeros_like(b) for b in params.biases]


def sgd_momentum_step(
    params: NetworkParams,
    grads: list[tuple[np.ndarray, np.ndarray]],
    state: MomentumState,
    lr: float,
    momentum: float,
    weight_decay: float = 0.0,
) -> None:
    """One in-place momentum update; L2 decay applies to weights only."""
    for i, (gw, gb) in enumerate(grads):
        if weight_decay:
            gw = gw + weight_decay * params.weights[i]
        state.w_vel[i] = momentum * state.w_vel[i] + gw
        state.b_vel[i] = momentum * state.b_vel[i] + gb
        params.weights[i] -= lr * state.w_vel[i]
        params.biases[i] -= lr * state.b_vel[i]


def backward_and_step(
    params: NetworkParams,
    cache: list,
    dlogits,
    state: MomentumState,
    lr: float,
    momentum: float,
    weight_decay: float = 0.0,
) -> tuple[NetworkParams, MomentumState]:
    """Backpropagate one batch gradient and apply the momentum update."""
    grads = backward(params, cache, dlogits)
    sgd_momentum_step(params, grads, state, lr, momentum, weight_decay)
    return params, state


def _accumulate(total, grads):
    if total is None:
        return grads
    return [(tw + gw, tb + gb) for (tw, tb), (gw, gb) in zip(total, grads)]


def make_lr_schedule(cfg: TrainConfig, total_steps: int):
    """Step-indexed learning rate. ``inverse`` anneals with progress
    p = step / total_steps as lr / (1 + gamma * p) ** power."""
    if cfg.lr_decay == "constant":
        return lambda step: cfg.learning_rate
    denom = max(total_steps, 1)

    def schedule(step: int) -> float:
        p = step / denom
        return cfg.learning_rate / (1.0 + cfg.lr_decay_gamma * p) ** cfg.lr_decay_power

    return schedule


class _BatchCycler:
    """Endless shuffled index batches over a pool, reshuffling on wrap."""

    def __init__(self, n: int, batch_size: int, rng: np.random.Generator):
        self.n = n
        self.batch_size = batch_size
        self.rng = rng
        self._order = rng.permutation(n)
        self._pos = 0

    def next_batch(self) -> np.ndarray:
        take: list[np.ndarray] = []
        need = self.batch_size
        while need > 0:
            if self._pos == self.n:
                self._order = self.rng.permutation(self.n)
                self._pos = 0
            grab = min(need, self.n - self._pos)
            take.append(self._order[self._pos : self._pos + grab])
            self._pos += grab
            need -= grab
        return np.concatenate(take)


def fit_epoch(
    params: NetworkParams,
    state: MomentumState,
    source: tuple[np.ndarray, np.ndarray],
    cfg: TrainConfig,
    rng: np.random.Generator,
    labeled_target: tuple[np.ndarray, np.ndarray] | None = None,
    unlabeled_target: np.ndarray | None = None,
    lr_fn=None,
    step_offset: int = 0,
) -> dict:
    """One pass over the source pool.

    Every optimizer step takes one source mini-batch plus, when the pools
    are non-empty, one mini-batch from the labeled-target and unlabeled
    pools (cycled with reshuffling, so small pools repeat).  Returns the
    mean loss and the number of steps taken.
    """
    src_X, src_y = source
    n_src = src_X.shape[0]
    if n_src == 0:
        raise ValueError("source pool must be non-empty")
    if lr_fn is None:
        lr_fn = make_lr_schedule(cfg, cfg.epochs * _steps_per_epoch(n_src, cfg.batch_size))

    lt = labeled_target if labeled_target is not None and labeled_target[0].shape[0] else None
    unl = unlabeled_target if unlabeled_target is not None and unlabeled_target.shape[0] else None
    lt_cycle = _BatchCycler(lt[0].shape[0], cfg.batch_size, rng) if lt else None
    unl_cycle = _BatchCycler(unl.shape[0], cfg.batch_size, rng) if unl is not None else None

    order = rng.permutation(n_src)
    losses = []
    step = step_offset
    for start in range(0, n_src, cfg.batch_size):
        rows = order[start : start + cfg.batch_size]
        src_logits, src_cache = forward(params, src_X[rows])
        lt_logits = lt_cache = lt_rows = None
        if lt:
            lt_rows = lt_cycle.next_batch()
            lt_logits, lt_cache = forward(params, lt[0][lt_rows])
        unl_logits = unl_cache = None
        if unl is not None:
            unl_rows = unl_cycle.next_batch()
            unl_logits, unl_cache = forward(params, unl[unl_rows])

        loss, g_src, g_lt, g_u = loss_value_and_logit_gradients(
            src_logits,
            src_y[rows],
            lt_logits,
            lt[1][lt_rows] if lt else None,
            unl_logits,
            cfg.weights,
            cfg.evidence,
        )
        grads = backward(params, src_cache, g_src)
        if lt:
            grads = _accumulate(grads, backward(params, lt_cache, g_lt))
        if unl is not None:
            grads = _accumulate(grads, backward(params, unl_cache, g_u))
        sgd_momentum_step(params, grads, state, lr_fn(step), cfg.momentum, cfg.weight_decay)
        losses.append(loss)
        step += 1

    return {"mean_loss": float(np.mean(losses)), "steps": step - step_offset}


def _steps_per_epoch(n: int, batch_size: int) -> int:
    return (n + batch_size - 1) // batch_size


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def train_source_only(
    source_X,
    source_y,
    n_classes: int,
    cfg: TrainConfig,
    objective: str = "evidential",
) -> NetworkParams:
    """Train on source data alone.

    ``objective`` is ``evidential`` (nll + kl on Dirichlet concentrations)
    or ``cross_entropy`` (softmax baseline used for calibration
    comparisons).  Both share the architecture, initialization and
    optimizer so the objectives are the only difference.
    """
    if objective not in ("evidential", "cross_entropy"):
        raise ValueError("objective must be 'evidential' or 'cross_entropy'")
    X = np.asarray(source_X, dtype=np.float64)
    y = np.asarray(source_y)
    rng = np.random.default_rng(cfg.seed)
    params = init_network((X.shape[1], *cfg.hidden_sizes, n_classes), cfg.activation, rng)
    state = MomentumState(params)
    total_steps = cfg.epochs * _steps_per_epoch(X.shape[0], cfg.batch_size)
    lr_fn = make_lr_schedule(cfg, total_steps)
    step = 0
    for _ in range(cfg.epochs):
        if objective == "evidential":
            stats = fit_epoch(params, state, (X, y), cfg, rng, lr_fn=lr_fn, step_offset=step)
            step += stats["steps"]
            continue
        order = rng.permutation(X.shape[0])
        for start in range(0, X.shape[0], cfg.batch_size):
            rows = order[start : start + cfg.batch_size]
            logits, cache = forward(params, X[rows])
            probs = _softmax(logits)
            dlogits = probs.copy()
            dlogits[np.arange(rows.shape[0]), y[rows]] -= 1.0
            dlogits /= rows.shape[0]
            backward_and_step(
                params, cache, dlogits, state, lr_fn(step), cfg.momentum, cfg.weight_decay
            )
            step += 1
    return params


def save_checkpoint(path, params: NetworkParams, cfg: TrainConfig) -> None:
    """Write a flat, versioned .npz checkpoint that round-trips bit-exactly."""
    payload = {
        "checkpoint_version": np.int64(CHECKPOINT_VERSION),
        "n_layers": np.int64(len(params.weights)),
        "activation": np.bytes_(params.activation.encode()),
        "config_json": np.bytes_(json.dumps(cfg.to_dict(), sort_keys=True).encode()),
    }
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        payload[f"w{i}"] = w
        payload[f"b{i}"] = b
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path) -> tuple[NetworkParams, TrainConfig]:
    """Read a checkpoint written by ``save_checkpoint``."""
    with np.load(path) as data:
        version = int(data["checkpoint_version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        n_layers = int(data["n_layers"])
        activation = data["activation"].item().decode()
        cfg = TrainConfig.from_dict(json.loads(data["config_json"].item().decode()))
        weights = [data[f"w{i}"] for i in range(n_layers)]
        biases = [data[f"b{i}"] for i in range(n_layers)]
    return NetworkParams(weights, biases, activation), cfg
