"""Optimal cut points between adjacent Gaussian classes and pixel labeling.

The threshold between two adjacent classes minimizes the total probability of
misclassifying either class's pixels to the other side. Setting the derivative
of that error to zero gives a quadratic in T whose coefficients depend on the
class parameters; the feasible root is the one inside the open interval
between the two means. Pixels exactly equal to a cut take the higher label.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .histogram import GrayImage
from .mixture import GaussianClass, MixtureModel

logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2.0)


class InfeasibleThresholdError(ValueError):
    """No usable root between the class means; carries the candidate roots."""

    def __init__(self, message: str, roots=(), pair_index: int | None = None):
        super().__init__(message)
        self.roots = tuple(roots)
        self.pair_index = pair_index


@dataclass
class ThresholdSet:
    """K-1 strictly increasing cuts with the misclassification error at each."""

    cuts: list[float]
    errors: list[float]

    def __post_init__(self):
        if len(self.cuts) != len(self.errors):
            raise ValueError("cuts and errors must have equal length")
        if any(b <= a for a, b in zip(self.cuts, self.cuts[1:])):
            raise ValueError("cuts must be strictly increasing")

    def to_dict(self) -> dict:
        return {"cuts": list(self.cuts), "errors": list(self.errors)}


@dataclass
class LabelImage:
    """Per-pixel class indices, shaped like the source image."""

    width: int
    height: int
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.size != self.width * self.height:
            raise ValueError("label count does not match image dimensions")
        self.labels = labels.reshape(self.height, self.width)


def _gaussian_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


def _check_pair(class_h: GaussianClass, class_h1: GaussianClass):
    if class_h.stddev <= 0 or class_h1.stddev <= 0:
        raise ValueError("class stddevs must be positive")


def classification_error(t: float, class_h: GaussianClass, class_h1: GaussianClass) -> float:
    """Total probability of pixels from either class landing past the cut ``t``.

    The upper class's mass below t plus the lower class's mass above t, each
    weighted by the class prior.
    """
    _check_pair(class_h, class_h1)
    e1 = _gaussian_cdf((t - class_h1.mean) / class_h1.stddev)
    e2 = 0.5 * math.erfc((t - class_h.mean) / (_SQRT2 * class_h.stddev))
    return class_h1.weight * e1 + class_h.weight * e2


def quadratic_coefficients(class_h: GaussianClass, class_h1: GaussianClass):
    """(A, B, C) of the stationarity condition A*T^2 + B*T + C = 0."""
    _check_pair(class_h, class_h1)
    if class_h.weight <= 0 or class_h1.weight <= 0:
        raise ValueError("class weights must be positive")
    sh2 = class_h.stddev**2
    s12 = class_h1.stddev**2
    a = sh2 - s12
    b = 2.0 * (class_h.mean * s12 - class_h1.mean * sh2)
    c = (
        (class_h.stddev * class_h1.mean) ** 2
        - (class_h1.stddev * class_h.mean) ** 2
        + 2.0 * sh2 * s12 * math.log(
            (class_h1.stddev * class_h.weight) / (class_h.stddev * class_h1.weight)
        )
    )
    return a, b, c


def _polish_root(t: float, a: float, b: float, c: float) -> float:
    # two Newton steps in extended precision pin the root to double accuracy
    a_, b_, c_ = np.longdouble(a), np.longdouble(b), np.longdouble(c)
    t_ = np.longdouble(t)
    for _ in range(2):
        deriv = 2.0 * a_ * t_ + b_
        if deriv == 0:
            break
        t_ = t_ - (a_ * t_ * t_ + b_ * t_ + c_) / deriv
    return float(t_)


def optimal_threshold(class_h: GaussianClass, class_h1: GaussianClass) -> float:
    """Cut between two adjacent classes (means must satisfy mean_h < mean_h1).

    Solves the stationarity quadratic and returns the root inside the open
    interval between the means. Equal variances reduce it to a linear solve.
    Raises InfeasibleThresholdError when no real root lies in the interval.
    """
    if not class_h.mean < class_h1.mean:
        raise ValueError("classes must be ordered by mean (mean_h < mean_h1)")
    a, b, c = quadratic_coefficients(class_h, class_h1)
    lo, hi = class_h.mean, class_h1.mean

    sh2 = class_h.stddev**2
    s12 = class_h1.stddev**2
    if abs(a) < 1e-12 * max(sh2, s12):
        # numerically equal variances: B*T + C = 0, B != 0 because means differ
        t = -c / b
        if not lo < t < hi:
            raise InfeasibleThresholdError(
                f"linear solution {t} outside ({lo}, {hi})", roots=(t,)
            )
        return float(t)

    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise InfeasibleThresholdError(
            f"no real root: discriminant {disc} < 0 for classes at means {lo}, {hi}"
        )
    # numerically stable root pair, then a high-precision polish
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b)) if b != 0 else None
    if q:
        roots = (q / a, c / q)
    else:
        r = math.sqrt(disc) / (2.0 * a)
        roots = (r, -r)
    roots = tuple(_polish_root(r, a, b, c) for r in roots)

    feasible = [r for r in roots if lo < r < hi]
    if not feasible:
        raise InfeasibleThresholdError(
            f"no root of the error quadratic inside ({lo}, {hi}); candidates {roots}",
            roots=roots,
        )
    if len(feasible) == 2:
        feasible.sort(key=lambda r: classification_error(r, class_h, class_h1))
        logger.warning(
            "both roots %s feasible between means %s and %s; keeping the one "
            "with smaller misclassification error", roots, lo, hi,
        )
    return float(feasible[0])


def compute_thresholds(model: MixtureModel) -> ThresholdSet:
    """Cuts between every adjacent class pair of a mean-sorted mixture."""
    if model.k < 2:
        raise ValueError("thresholding needs at least 2 classes")
    means = [c.mean for c in model.classes]
    if any(b <= a for a, b in zip(means, means[1:])):
        raise ValueError("model classes must be sorted by strictly increasing mean")
    cuts, errors = [], []
    for h in range(model.k - 1):
        try:
            t = optimal_threshold(model.classes[h], model.classes[h + 1])
        except InfeasibleThresholdError as exc:
            raise InfeasibleThresholdError(
                f"classes {h} and {h + 1}: {exc}", roots=exc.roots, pair_index=h
            ) from exc
        except ValueError as exc:
            # degenerate pair (zero weight / bad stddev) cannot be thresholded
            raise InfeasibleThresholdError(
                f"classes {h} and {h + 1}: {exc}", pair_index=h
            ) from exc
        cuts.append(t)
        errors.append(classification_error(t, model.classes[h], model.classes[h + 1]))
    return ThresholdSet(cuts, errors)


def segment(image: GrayImage, thresholds: ThresholdSet) -> LabelImage:
    """Label each pixel with the number of cuts at or below its value."""
    cuts = np.asarray(thresholds.cuts, dtype=float)
    labels = np.searchsorted(cuts, image.pixels.ravel(), side="right")
    return LabelImage(image.width, image.height, labels.astype(np.uint8))


def render_labels(labels: LabelImage, model: MixtureModel) -> GrayImage:
    """Visualize labels by painting each class with its rounded mean level."""
    if int(labels.labels.max(initial=0)) >= model.k:
        raise ValueError("label indices exceed the model's class count")
    palette = np.array(
        [min(max(int(round(c.mean)), 0), 255) for c in model.classes], dtype=np.uint8
    )
    return GrayImage(labels.width, labels.height, palette[labels.labels])


def labels_as_gray(labels: LabelImage) -> GrayImage:
    """Raw label indices as an image (label value = gray value)."""
    return GrayImage(labels.width, labels.height, labels.labels)
