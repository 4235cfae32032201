"""Independent reference implementations used only to cross-check results."""

import mpmath
import numpy as np
from scipy.special import erfc

from beeseg import quadratic_coefficients


def brute_force_objective(model, hist, omega):
    """Term-by-term fit objective at 50 significant digits."""
    with mpmath.workdps(50):
        total = mpmath.mpf(0)
        for g in range(256):
            p = mpmath.mpf(0)
            for c in model.classes:
                z = (mpmath.mpf(g) - mpmath.mpf(c.mean)) / mpmath.mpf(c.stddev)
                p += (mpmath.mpf(c.weight)
                      / (mpmath.sqrt(2 * mpmath.pi) * mpmath.mpf(c.stddev))
                      * mpmath.exp(-z * z / 2))
            total += (p - mpmath.mpf(float(hist.bins[g]))) ** 2
        sum_w = mpmath.fsum(mpmath.mpf(c.weight) for c in model.classes)
        return float(total / 256 + mpmath.mpf(omega) * abs(sum_w - 1))


def error_curve(ts, class_h, class_h1):
    """Vectorized misclassification error of a cut between two classes."""
    ts = np.asarray(ts, dtype=float)
    e1 = 0.5 * erfc((class_h1.mean - ts) / (np.sqrt(2.0) * class_h1.stddev))
    e2 = 0.5 * erfc((ts - class_h.mean) / (np.sqrt(2.0) * class_h.stddev))
    return class_h1.weight * e1 + class_h.weight * e2


def grid_min_error(class_h, class_h1, step=1e-4):
    """Scan the open interval between the means; returns (t_min, error_min)."""
    ts = np.arange(class_h.mean + step, class_h1.mean, step)
    errs = error_curve(ts, class_h, class_h1)
    i = int(np.argmin(errs))
    return float(ts[i]), float(errs[i])


def scaled_residual(class_h, class_h1, t):
    """Backward error of the threshold quadratic at t, in exact arithmetic.

    The raw residual scales with the coefficient magnitudes (up to ~1e7 for
    8-bit gray classes), so it is normalized by the largest monomial term.
    """
    a, b, c = quadratic_coefficients(class_h, class_h1)
    with mpmath.workdps(50):
        ta, tb, tc, tt = map(mpmath.mpf, (a, b, c, t))
        residual = abs(ta * tt * tt + tb * tt + tc)
        scale = max(abs(ta * tt * tt), abs(tb * tt), abs(tc), mpmath.mpf(1))
        return float(residual / scale)
