"""Gaussian mixtures over gray levels: density, fit objective, flat encoding.

A candidate parameter vector lays out one (weight, stddev, mean) triple per
class, in that order, so a K-class model occupies 3K slots. The fit objective
is the mean squared error between the mixture density and the histogram at
the 256 integer gray levels, plus a soft penalty ``omega * |sum(weights) - 1|``
on the weight-normalization constraint. The constraint is never enforced by
renormalizing during a fit; reported models carry ``sum_weights`` so the
constraint violation stays visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .histogram import GRAY_LEVELS, Histogram

SQRT_2PI = math.sqrt(2.0 * math.pi)

#: gray levels where the objective compares density against the histogram
EVAL_POINTS = np.arange(GRAY_LEVELS, dtype=float)


@dataclass
class GaussianClass:
    """One mixture component: prior weight, mean and stddev in gray levels."""

    weight: float
    mean: float
    stddev: float

    def __post_init__(self):
        if not self.stddev > 0:
            raise ValueError(f"stddev must be positive, got {self.stddev}")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight must lie in [0, 1], got {self.weight}")


@dataclass
class MixtureModel:
    """Ordered list of Gaussian classes."""

    classes: list[GaussianClass]

    def __post_init__(self):
        if len(self.classes) < 1:
            raise ValueError("a mixture needs at least one class")

    @property
    def k(self) -> int:
        return len(self.classes)

    @property
    def sum_weights(self) -> float:
        # fsum keeps the constraint penalty exact to the last ulp
        return math.fsum(c.weight for c in self.classes)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(weights, means, stddevs) as float arrays."""
        w = np.array([c.weight for c in self.classes])
        m = np.array([c.mean for c in self.classes])
        s = np.array([c.stddev for c in self.classes])
        return w, m, s


@dataclass
class ObjectiveSpec:
    """Target histogram plus fit-objective parameters."""

    histogram: Histogram
    k: int
    omega: float = 1.0
    n: int = GRAY_LEVELS

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")
        if self.n != GRAY_LEVELS:
            raise ValueError(f"n is fixed at {GRAY_LEVELS} evaluation points")


def mixture_density(model: MixtureModel, x) -> float | np.ndarray:
    """Mixture density at ``x`` (scalar or array of gray levels).

    Far from all means the exponentials underflow to 0 rather than raising.
    """
    w, m, s = model.arrays()
    xs = np.asarray(x, dtype=float)
    z = (xs[..., None] - m) / s
    out = np.sum(w / (SQRT_2PI * s) * np.exp(-0.5 * z * z), axis=-1)
    return float(out) if np.isscalar(x) or xs.ndim == 0 else out


def objective_j(model: MixtureModel, spec: ObjectiveSpec) -> float:
    """Mean squared density-vs-histogram error plus the weight-sum penalty."""
    if model.k != spec.k:
        raise ValueError(f"model has {model.k} classes but spec expects {spec.k}")
    p = mixture_density(model, EVAL_POINTS)
    mse = float(np.mean((p - spec.histogram.bins) ** 2))
    return mse + spec.omega * abs(model.sum_weights - 1.0)


def encode_candidate(model: MixtureModel) -> np.ndarray:
    """Flatten a model into its 3K parameter vector."""
    out = np.empty(3 * model.k)
    for i, c in enumerate(model.classes):
        out[3 * i : 3 * i + 3] = (c.weight, c.stddev, c.mean)
    return out


def decode_candidate(vector, k: int) -> MixtureModel:
    """Rebuild a K-class model from a flat vector; inverse of encode_candidate."""
    vec = np.asarray(vector, dtype=float)
    if vec.ndim != 1 or vec.size % 3 != 0 or vec.size != 3 * k:
        raise ValueError(f"candidate vector must have length 3*{k}, got {vec.size}")
    classes = [
        GaussianClass(weight=float(vec[3 * i]), stddev=float(vec[3 * i + 1]), mean=float(vec[3 * i + 2]))
        for i in range(k)
    ]
    return MixtureModel(classes)


def sort_classes(model: MixtureModel) -> MixtureModel:
    """Reorder classes by ascending mean (ties: ascending stddev, then weight)."""
    ordered = sorted(model.classes, key=lambda c: (c.mean, c.stddev, c.weight))
    return MixtureModel(list(ordered))


def model_to_dict(model: MixtureModel, objective: float | None = None) -> dict:
    """JSON-ready form; class order is whatever the model currently holds."""
    return {
        "classes": [
            {"weight": c.weight, "mean": c.mean, "stddev": c.stddev}
            for c in model.classes
        ],
        "objective": objective,
        "sum_weights": model.sum_weights,
    }


def model_from_dict(data: dict) -> MixtureModel:
    try:
        classes = [
            GaussianClass(weight=c["weight"], mean=c["mean"], stddev=c["stddev"])
            for c in data["classes"]
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model object: {exc}") from None
    return MixtureModel(classes)
