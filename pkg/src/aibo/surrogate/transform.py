"""Yeo-Johnson output warping for GP targets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

__all__ = ["PowerTransform", "golden_section_max"]

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-6, max_iter: int = 200) -> float:
    """Maximize a unimodal scalar function on ``[lo, hi]``."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _yj_forward(z: np.ndarray, lam: float) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    zp, zn = z[pos], z[~pos]
    if abs(lam) < 1e-12:
        out[pos] = np.log1p(zp)
    else:
        out[pos] = np.expm1(lam * np.log1p(zp)) / lam
    if abs(lam - 2.0) < 1e-12:
        out[~pos] = -np.log1p(-zn)
    else:
        out[~pos] = -np.expm1((2.0 - lam) * np.log1p(-zn)) / (2.0 - lam)
    return out


def _yj_inverse(t: np.ndarray, lam: float) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    tp, tn = t[pos], t[~pos]
    if abs(lam) < 1e-12:
        out[pos] = np.expm1(tp)
    else:
        out[pos] = np.expm1(np.log1p(lam * tp) / lam)
    if abs(lam - 2.0) < 1e-12:
        out[~pos] = -np.expm1(-tn)
    else:
        out[~pos] = -np.expm1(np.log1p(-(2.0 - lam) * tn) / (2.0 - lam))
    return out


@dataclass(frozen=True)
class PowerTransform:
    """Standardize, apply Yeo-Johnson, standardize again.

    The first standardization keeps the fitted exponent insensitive to the
    objective's units; the second gives zero-mean, unit-variance outputs.
    """

    lam: float = 1.0
    loc: float = 0.0
    scale: float = 1.0
    mean_tf: float = 0.0
    std_tf: float = 1.0

    @classmethod
    def fit(cls, y, lam_bounds: tuple[float, float] = (-5.0, 5.0)) -> PowerTransform:
        y = np.asarray(y, dtype=float).ravel()
        loc = float(y.mean()) if y.size else 0.0
        scale = float(y.std()) if y.size else 0.0
        if y.size < 2 or not (np.isfinite(scale) and scale > 0.0):
            # constant (or spread below float resolution): identity warp, unit scale
            return cls(1.0, loc, 1.0, 0.0, 1.0)
        z = (y - loc) / scale
        lam = golden_section_max(lambda l: stats.yeojohnson_llf(l, z), *lam_bounds)
        t = _yj_forward(z, lam)
        std = float(t.std())
        if not np.isfinite(std) or std <= 0.0:
            lam, t = 1.0, z
            std = float(t.std())
        return cls(float(lam), loc, scale, float(t.mean()), std)

    def apply(self, y) -> np.ndarray:
        z = (np.asarray(y, dtype=float) - self.loc) / self.scale
        return (_yj_forward(np.atleast_1d(z), self.lam).reshape(np.shape(z)) - self.mean_tf) / self.std_tf

    def invert(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        u = np.atleast_1d(t * self.std_tf + self.mean_tf)
        return _yj_inverse(u, self.lam).reshape(t.shape) * self.scale + self.loc
