"""Datasets: a shifted-Gaussian benchmark and a labeled-CSV format.

The benchmark places C cluster means on a circle of radius
``class_separation`` in the first two feature dimensions (remaining
dimensions are pure noise) and derives the target domain by rotating
those means in that plane and/or translating them along the diagonal
direction (1, 1, 0, ...) / sqrt(2).  Both domains draw isotropic Gaussian
noise around their means, balanced across classes, from a single seeded
generator: the same seed reproduces the same datasets bitwise.

CSV rows are ``label,f1,...,fd`` with floats written in shortest
round-trip form, so save followed by load is lossless.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainDataset",
    "ShiftBenchmarkConfig",
    "ParseError",
    "gen_shifted_gaussians",
    "load_features_csv",
    "save_features_csv",
]

_SHIFT_KINDS = ("rotation", "translation", "both")


class ParseError(ValueError):
    """A CSV row that cannot be interpreted; the message names the row."""


@dataclass(frozen=True)
class DomainDataset:
    """Feature matrix with integer labels and a domain tag."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    domain: str
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if y.shape != (X.shape[0],):
            raise ValueError("labels must align with the feature rows")
        if self.n_classes < 2:
            raise ValueError("need at least two classes")
        if y.size and (not np.issubdtype(y.dtype, np.integer)
                       or (y < 0).any() or (y >= self.n_classes).any()):
            raise ValueError(f"labels must be integers in [0, {self.n_classes})")
        if X.size and not np.isfinite(X).all():
            raise ValueError("features must be finite")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y.astype(np.int64))

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])


@dataclass(frozen=True)
class ShiftBenchmarkConfig:
    """Geometry and size of one shifted-Gaussian benchmark draw."""

    n_classes: int = 3
    n_features: int = 6
    n_source: int = 600
    n_target: int = 600
    class_separation: float = 2.0
    noise_scale: float = 0.5
    shift_kind: str = "rotation"
    shift_magnitude: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("need at least two classes")
        if self.n_features < 2:
            raise ValueError("need at least two feature dimensions")
        if self.n_source < self.n_classes or self.n_target < self.n_classes:
            raise ValueError("each domain needs at least one sample per class")
        if self.class_separation <= 0.0 or self.noise_scale <= 0.0:
            raise ValueError("class_separation and noise_scale must be positive")
        if self.shift_kind not in _SHIFT_KINDS:
            raise ValueError(f"shift_kind must be one of {_SHIFT_KINDS}")
        if self.shift_magnitude < 0.0:
            raise ValueError("shift_magnitude must be non-negative")

    def to_dict(self) -> dict:
        return {
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "n_source": self.n_source,
            "n_target": self.n_target,
            "class_separation": self.class_separation,
            "noise_scale": self.noise_scale,
            "shift_kind": self.shift_kind,
            "shift_magnitude": self.shift_magnitude,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ShiftBenchmarkConfig":
        known = {
            "n_classes", "n_features", "n_source", "n_target", "class_separation",
            "noise_scale", "shift_kind", "shift_magnitude", "seed",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown benchmark keys: {sorted(unknown)}")
        return cls(**data)


def _class_means(cfg: ShiftBenchmarkConfig) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(cfg.n_classes) / cfg.n_classes
    means = np.zeros((cfg.n_classes, cfg.n_features))
    means[:, 0] = cfg.class_separation * np.cos(angles)
    means[:, 1] = cfg.class_separation * np.sin(angles)
    return means


def _shift_means(means: np.ndarray, cfg: ShiftBenchmarkConfig) -> np.ndarray:
    out = means.copy()
    if cfg.shift_kind in ("rotation", "both"):
        theta = cfg.shift_magnitude
        c, s = np.cos(theta), np.sin(theta)
        x, y = out[:, 0].copy(), out[:, 1].copy()
        out[:, 0] = c * x - s * y
        out[:, 1] = s * x + c * y
    if cfg.shift_kind in ("translation", "both"):
        step = cfg.shift_magnitude / np.sqrt(2.0)
        out[:, 0] += step
        out[:, 1] += step
    return out


def _balanced_labels(n: int, n_classes: int) -> np.ndarray:
    counts = np.full(n_classes, n // n_classes, dtype=np.int64)
    counts[: n % n_classes] += 1
    return np.repeat(np.arange(n_classes, dtype=np.int64), counts)


def _draw_domain(means, n, cfg, domain, rng) -> DomainDataset:
    labels = _balanced_labels(n, cfg.n_classes)
    X = means[labels] + cfg.noise_scale * rng.standard_normal((n, cfg.n_features))
    order = rng.permutation(n)
    return DomainDataset(X[order], labels[order], cfg.n_classes, domain)


def gen_shifted_gaussians(cfg: ShiftBenchmarkConfig) -> tuple[DomainDataset, DomainDataset]:
    """Draw the (source, target) pair described by ``cfg``."""
    rng = np.random.default_rng(cfg.seed)
    src_means = _class_means(cfg)
    tgt_means = _shift_means(src_means, cfg)
    source = _draw_domain(src_means, cfg.n_source, cfg, "source", rng)
    target = _draw_domain(tgt_means, cfg.n_target, cfg, "target", rng)
    return source, target


def save_features_csv(path, dataset: DomainDataset, header: bool = False) -> None:
    """Write ``label,f1,...,fd`` rows; floats use shortest round-trip form."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(["label"] + [f"f{j + 1}" for j in range(dataset.n_features)])
        for label, row in zip(dataset.labels, dataset.features):
            writer.writerow([int(label)] + [repr(float(v)) for v in row])


def load_features_csv(
    path,
    n_classes: int,
    has_header: bool = False,
    domain: str = "unspecified",
    name: str = "",
) -> DomainDataset:
    """Read a ``label,f1,...,fd`` file.

    Every row must have the same width, an integer label inside
    [0, n_classes) and finite features; violations raise ``ParseError``
    naming the 1-based file row.
    """
    labels: list[int] = []
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if has_header and line_no == 1:
                continue
            if not row:
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise ParseError(f"row {line_no}: need a label and at least one feature")
            elif len(row) != width:
                raise ParseError(f"row {line_no}: expected {width} fields, found {len(row)}")
            try:
                label = int(row[0])
            except ValueError:
                raise ParseError(f"row {line_no}: label {row[0]!r} is not an integer") from None
            if not 0 <= label < n_classes:
                raise ParseError(f"row {line_no}: label {label} outside [0, {n_classes})")
            try:
                values = [float(v) for v in row[1:]]
            except ValueError:
                raise ParseError(f"row {line_no}: non-numeric feature value") from None
            if not all(np.isfinite(values)):
                raise ParseError(f"row {line_no}: features must be finite")
            labels.append(label)
            rows.append(values)
    if not rows:
        raise ParseError("file contains no data rows")
    return DomainDataset(
        np.array(rows, dtype=np.float64),
        np.array(labels, dtype=np.int64),
        n_classes,
        domain,
        name,
    )
