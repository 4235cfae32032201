"""Weighted expectation-maximization baseline for histogram mixtures.

Fits the same K-class Gaussian mixture by maximizing the histogram-weighted
log-likelihood ``sum_g h(g) * log p(g)`` instead of the squared-error fit
objective, which is why comparison reports carry both numbers. Unlike the
bee-colony search, EM starts from a user-supplied model and is sensitive to
that choice. Responsibilities are computed in log space so that initial
conditions far from the data do not underflow to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .histogram import GRAY_LEVELS, Histogram
from .mixture import SQRT_2PI, GaussianClass, MixtureModel


class DegenerateModelError(RuntimeError):
    """Responsibilities vanished: the model assigns no mass where data sits."""


@dataclass
class EmConfig:
    max_iterations: int = 1000
    tolerance: float = 1e-8  # absolute change in log-likelihood
    variance_floor: float = 0.5  # lower bound applied to each stddev

    def __post_init__(self):
        if self.max_iterations < 1 or self.tolerance <= 0 or self.variance_floor <= 0:
            raise ValueError("EM settings must all be positive")


@dataclass
class EmFitResult:
    model: MixtureModel
    iterations: int
    log_likelihoods: list[float]

    @property
    def log_likelihood(self) -> float:
        return self.log_likelihoods[-1]


_LEVELS = np.arange(GRAY_LEVELS, dtype=float)


def _log_components(w, m, s) -> np.ndarray:
    """Per-level, per-class log of the weighted component density."""
    z = (_LEVELS[:, None] - m[None, :]) / s[None, :]
    with np.errstate(divide="ignore"):  # zero weights legitimately give -inf
        return np.log(w)[None, :] - np.log(SQRT_2PI * s)[None, :] - 0.5 * z * z


def _log_density_and_resp(w, m, s, populated):
    """(log mixture density per level, responsibilities); log-sum-exp stable."""
    logcomp = _log_components(w, m, s)
    peak = logcomp.max(axis=1)
    finite = np.isfinite(peak)
    if not np.all(finite[populated]):
        raise DegenerateModelError("mixture density vanishes on populated bins")
    resp = np.zeros_like(logcomp)
    log_density = np.full(GRAY_LEVELS, -np.inf)
    rel = np.exp(logcomp[finite] - peak[finite, None])
    denom = rel.sum(axis=1)
    resp[finite] = rel / denom[:, None]
    log_density[finite] = peak[finite] + np.log(denom)
    return log_density, resp


def weighted_log_likelihood(model: MixtureModel, histogram: Histogram) -> float:
    """Histogram-weighted log-likelihood of the mixture."""
    populated = histogram.bins > 0
    log_density, _ = _log_density_and_resp(*model.arrays(), populated)
    return float(np.sum(histogram.bins[populated] * log_density[populated]))


def em_fit(histogram: Histogram, k: int, init: MixtureModel,
           config: EmConfig | None = None) -> EmFitResult:
    """Iterate weighted EM from ``init`` until the log-likelihood stalls.

    Gray levels act as data points weighted by their histogram frequency.
    Output weights sum to 1 by construction; every stddev is clamped to
    ``config.variance_floor`` from below. The log-likelihood trajectory is
    checked to be non-decreasing at every iteration.
    """
    config = config or EmConfig()
    if init.k != k:
        raise ValueError(f"init has {init.k} classes, expected {k}")
    if int(np.count_nonzero(histogram.bins)) < k:
        raise ValueError(
            f"cannot fit {k} classes to a histogram with fewer nonzero bins"
        )

    h = histogram.bins
    populated = h > 0
    w, m, s = init.arrays()
    lls: list[float] = []
    updates = 0
    floored = False  # an active floor makes the update inexact, so skip the guard

    for _ in range(config.max_iterations + 1):
        log_density, resp = _log_density_and_resp(w, m, s, populated)
        ll = float(np.sum(h[populated] * log_density[populated]))
        if lls and not floored and ll < lls[-1] - 1e-9 * (1.0 + abs(lls[-1])):
            raise RuntimeError(
                f"log-likelihood decreased from {lls[-1]} to {ll}; EM update broken"
            )
        converged = bool(lls) and abs(ll - lls[-1]) < config.tolerance
        lls.append(ll)
        if converged or updates == config.max_iterations:
            break

        mass = (h[:, None] * resp).sum(axis=0)
        if np.any(mass <= 0):
            raise DegenerateModelError("a class received zero total responsibility")
        m = (h[:, None] * resp * _LEVELS[:, None]).sum(axis=0) / mass
        var = (h[:, None] * resp * (_LEVELS[:, None] - m[None, :]) ** 2).sum(axis=0) / mass
        spread = np.sqrt(var)
        floored = bool(np.any(spread < config.variance_floor))
        s = np.maximum(spread, config.variance_floor)
        w = mass
        updates += 1

    w = np.clip(w, 0.0, 1.0)  # shave float noise like 1+2e-16 off the weights
    model = MixtureModel([
        GaussianClass(weight=float(w[i]), mean=float(m[i]), stddev=float(s[i]))
        for i in range(k)
    ])
    return EmFitResult(model, updates, lls)
