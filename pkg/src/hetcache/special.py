"""Beta-function helpers used by the interference geometry coefficients.

``beta_fn(x, y)`` is the complete Beta function and
``beta_inc_comp(x, y, z)`` its complementary incomplete variant
``int_z^1 u^(x-1) (1-u)^(y-1) du``. Both endpoint singularities are
integrable for arguments in (0,1); evaluation goes through log-gamma and
the regularized incomplete beta rather than direct quadrature.
"""

from __future__ import annotations

import math

from scipy import special as _sp

__all__ = ["beta_fn", "beta_inc_comp"]


def beta_fn(x: float, y: float) -> float:
    """Complete Beta function B(x,y) for x, y > 0."""
    if not (x > 0 and y > 0):
        raise ValueError(f"beta_fn requires positive arguments, got ({x}, {y})")
    return math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y))


def beta_inc_comp(x: float, y: float, z: float) -> float:
    """Complementary incomplete Beta function B'(x,y,z) = int_z^1 u^(x-1)(1-u)^(y-1) du.

    Requires x, y in (0,1) and z in [0,1]. Computed as
    ``B(x,y) * I_{1-z}(y, x)`` where I is the regularized incomplete beta,
    which keeps full relative accuracy near both endpoints.
    """
    if not (0 < x < 1 and 0 < y < 1):
        raise ValueError(f"beta_inc_comp requires x, y in (0,1), got ({x}, {y})")
    if not 0 <= z <= 1:
        raise ValueError(f"beta_inc_comp requires z in [0,1], got {z}")
    if z == 1.0:
        return 0.0
    return beta_fn(x, y) * float(_sp.betainc(y, x, 1.0 - z))
