"""Synthetic histograms drawn from known ground-truth mixtures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .histogram import GRAY_LEVELS, Histogram
from .mixture import MixtureModel, mixture_density

NOISE_MODES = ("exact", "multinomial")


@dataclass
class SynthSpec:
    """Ground-truth mixture plus sampling instructions.

    ``exact`` emits the discretized, renormalized truth density itself;
    ``multinomial`` draws ``pixel_count`` pixels from it (seed required).
    """

    truth: MixtureModel
    pixel_count: int
    noise: str = "exact"
    seed: int | None = None

    def __post_init__(self):
        if abs(self.truth.sum_weights - 1.0) > 1e-9:
            raise ValueError("truth mixture weights must sum to 1")
        if self.pixel_count <= 0:
            raise ValueError("pixel_count must be positive")
        if self.noise not in NOISE_MODES:
            raise ValueError(f"noise must be one of {NOISE_MODES}, got {self.noise!r}")
        if self.noise == "multinomial" and self.seed is None:
            raise ValueError("multinomial noise needs a seed")


def synth_histogram(spec: SynthSpec) -> Histogram:
    """Discretize the truth density over the 256 gray levels.

    The density is renormalized over the gray range, so tails truncated off
    [0, 255] never break the unit-sum invariant.
    """
    p = mixture_density(spec.truth, np.arange(GRAY_LEVELS, dtype=float))
    total = float(p.sum())
    if total <= 0 or not np.isfinite(total):
        raise ValueError("truth density is numerically zero on every gray level")
    q = p / total
    if spec.noise == "exact":
        return Histogram(q, spec.pixel_count)
    counts = np.random.default_rng(spec.seed).multinomial(spec.pixel_count, q)
    return Histogram(counts / spec.pixel_count, spec.pixel_count)
