"""Survival functions for F and t statistics via the regularized
incomplete beta function, so p-value rankings are stable to ~1e-10."""

from __future__ import annotations

import math

from scipy.special import betainc


def f_sf(f: float, d1: float, d2: float) -> float:
    """P(F(d1, d2) > f)."""
    if not math.isfinite(f):
        return 0.0 if f > 0 else 1.0
    if f <= 0.0:
        return 1.0
    x = d2 / (d2 + d1 * f)
    return float(betainc(d2 / 2.0, d1 / 2.0, x))


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T(df)| > |t|); equals the F(1, df) tail of t^2."""
    return f_sf(t * t, 1.0, df)
