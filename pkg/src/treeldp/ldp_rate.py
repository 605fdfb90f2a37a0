"""Rate functions as Legendre transforms of a convex free energy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

from .errors import KinkAtZero
from .free_energy import Slope
from .ising_blocks import ModelSpec

DEFAULT_BRACKET = 50.0
BETA_LIMIT = 700.0


class FreeEnergyCurve(Protocol):
    """What :func:`rate_function` needs from a free energy."""

    def value(self, beta): ...

    def derivative(self, beta) -> Slope: ...

    @property
    def slope_bounds(self) -> tuple[float, float]: ...


@dataclass(frozen=True)
class RatePoint:
    eta: float
    y: float
    value: float
    finite: bool


def _infinite(x: float) -> RatePoint:
    return RatePoint(math.copysign(math.inf, x), x, math.inf, False)


def rate_function(F: FreeEnergyCurve, x: float, tol: float = 1e-10,
                  bracket: float = DEFAULT_BRACKET) -> RatePoint:
    """``I(x) = sup_beta (beta x - F(beta))``.

    The concave objective is maximized by bisecting on the subgradient of
    ``F``: the maximizer is the ``beta`` whose one-sided derivatives straddle
    ``x``.  A kink of ``F`` at 0 therefore needs no special handling.  Points
    on or outside the asymptotic slopes of ``F`` get ``finite=False``.
    """
    lo_slope, hi_slope = F.slope_bounds
    if not lo_slope < x < hi_slope:
        return _infinite(x)
    at_zero = F.derivative(0.0)
    if at_zero.left <= x <= at_zero.right:
        return RatePoint(0.0, x, 0.0 - float(F.value(0.0)), True)
    sign = 1.0 if x > at_zero.right else -1.0

    def below(beta: float) -> bool:
        # x still lies beyond the subgradient at beta, walking away from 0
        s = F.derivative(beta)
        return s.right < x if sign > 0 else s.left > x

    a, b = 0.0, sign * bracket
    while below(b):
        a, b = b, 2.0 * b
        if abs(b) > BETA_LIMIT:
            return _infinite(x)
    while abs(b - a) > tol:
        m = 0.5 * (a + b)
        if below(m):
            a = m
        else:
            s = F.derivative(m)
            if s.left <= x <= s.right:
                a = b = m
                break
            b = m
    candidates = (a, 0.5 * (a + b), b)
    values = [beta * x - float(F.value(beta)) for beta in candidates]
    best = max(range(3), key=values.__getitem__)
    return RatePoint(candidates[best], x, max(values[best], 0.0), True)


def rate_at_derivative(F: FreeEnergyCurve, eta: float) -> RatePoint:
    """``(y, I(y))`` with ``y = F'(eta)`` and ``I(y) = eta y - F(eta)``."""
    s = F.derivative(eta)
    if s.is_kink:
        raise KinkAtZero(s.left, s.right)
    y = float(s.left)
    return RatePoint(float(eta), y, eta * y - float(F.value(eta)), True)


def log_cosh(x: float) -> float:
    a = abs(x)
    return a + math.log1p(math.exp(-2.0 * a)) - math.log(2.0)


def half_parametric(model: ModelSpec, gamma: float, eta: float) -> RatePoint:
    """Parametric rate curve at ``p = 1/2``: ``y = c tanh(eta)``, ``I = c (eta tanh(eta) - log cosh(eta))``."""
    c = model.coefficient(gamma)
    t = math.tanh(eta)
    return RatePoint(float(eta), c * t, c * (eta * t - log_cosh(eta)), True)


def effective_domain(model: ModelSpec, gamma: float) -> tuple[float, float]:
    """Open interval on which the limiting rate function is finite."""
    c = model.coefficient(gamma)
    return -c, c
