"""Special functions and quadrature primitives.

Everything downstream reduces to Gaussian integrals, so this module only has
to be good at two things: the complementary error function and adaptive
integration of Gaussian-envelope integrands on (half-)infinite intervals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy import integrate, special

__all__ = [
    "ConvergenceError",
    "Interval",
    "QuadratureSpec",
    "DEFAULT_SPEC",
    "REGIONS",
    "erfc",
    "log_erfc",
    "integrate_1d",
    "integrate_2d_region",
]

# Half-width used when an infinite limit is truncated, in units of the
# quadrature standard deviation (1/2 in the [x1, x2] = i/2 convention).
TAIL_SIGMAS = 8.0
QUADRATURE_SIGMA = 0.5


class ConvergenceError(RuntimeError):
    """Adaptive quadrature ran out of subdivisions.

    The best available estimate is kept on ``estimate`` so callers can decide
    whether it is still usable.
    """

    def __init__(self, message: str, estimate: float = math.nan, abserr: float = math.nan):
        super().__init__(message, estimate, abserr)
        self.estimate = estimate
        self.abserr = abserr

    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval endpoints must not be NaN")
        if self.lo == math.inf or self.hi == -math.inf:
            raise ValueError("infinite endpoints only allowed as lo=-inf or hi=+inf")
        if self.lo > self.hi:
            raise ValueError(f"empty interval: lo={self.lo} > hi={self.hi}")


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be a positive integer")


DEFAULT_SPEC = QuadratureSpec()


def erfc(x: float) -> float:
    """Complementary error function ``2/sqrt(pi) * int_x^inf exp(-t^2) dt``."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"erfc is only defined here for finite input, got {x!r}")
    return math.erfc(x)


def log_erfc(x: float) -> float:
    """Natural log of erfc, accurate far into the right tail where erfc underflows."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"log_erfc requires finite input, got {x!r}")
    # erfc(x) = 2 * Phi(-sqrt(2) x)
    return math.log(2.0) + float(special.log_ndtr(-math.sqrt(2.0) * x))


def _quad(f, lo, hi, spec, points=None):
    kwargs = dict(epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                  limit=int(spec.max_subdivisions), full_output=1)
    if points is not None:
        inner = sorted(p for p in points if lo < p < hi)
        if inner:
            kwargs["points"] = inner
    res = integrate.quad(f, lo, hi, **kwargs)
    value, abserr = res[0], res[1]
    ier = 0
    if len(res) > 3:
        # scipy only appends a message on abnormal termination
        ier = 1 if "maximum number of subdivisions" in res[3] else 2
    tol = max(spec.abs_tol, spec.rel_tol * abs(value))
    if ier == 1 or (ier and abserr > 100 * tol):
        raise ConvergenceError(
            f"quadrature over [{lo}, {hi}] did not converge "
            f"(estimate {value!r}, error {abserr:.3g})",
            estimate=value, abserr=abserr)
    return value


def _truncate(over: Interval, centers) -> tuple[float, float]:
    reach = TAIL_SIGMAS * QUADRATURE_SIGMA
    lo, hi = over.lo, over.hi
    if math.isinf(lo):
        lo = (min(centers) if centers else 0.0) - reach
        lo = min(lo, hi - reach)
    if math.isinf(hi):
        hi = (max(centers) if centers else 0.0) + reach
        # a finite lower limit past every centre still needs a full tail
        hi = max(hi, lo + reach)
    return lo, hi


def integrate_1d(f: Callable[[float], float], over: Interval,
                 spec: QuadratureSpec = DEFAULT_SPEC,
                 centers=None) -> float:
    """Integrate ``f`` over ``over``.

    Infinite limits are truncated eight quadrature standard deviations past
    the outermost Gaussian centre. ``centers`` lists the means of the
    Gaussian terms that make up ``f``; they are also used as breakpoints so
    narrow peaks are never stepped over. Without ``centers`` the envelope is
    assumed to be centred at the origin.

    Raises:
        ConvergenceError: if the subdivision budget is exhausted.
    """
    centers = list(centers) if centers is not None else []
    lo, hi = _truncate(over, centers)
    if lo == hi:
        return 0.0
    return _quad(f, lo, hi, spec, points=centers)


# Cone regions of the plane used for Eve's four-way decision.
REGIONS = ("x>=|y|", "y>|x|", "-x>=|y|", "-y>|x|")


def integrate_2d_region(f: Callable[[float, float], float], region: str,
                        spec: QuadratureSpec = DEFAULT_SPEC,
                        extent: float = 10.0) -> float:
    """Integrate ``f(x, y)`` over one of the four cones in ``REGIONS``.

    Computed as an iterated integral: the outer variable runs along the cone
    axis from 0 to ``extent`` and the inner one across the cone. ``extent``
    must reach past the density's Gaussian tails.
    """
    if region not in REGIONS:
        raise ValueError(f"unknown region {region!r}; expected one of {REGIONS}")

    # (axis sign, whether the axis is y) for each cone
    sign, axis_is_y = {
        "x>=|y|": (1.0, False),
        "y>|x|": (1.0, True),
        "-x>=|y|": (-1.0, False),
        "-y>|x|": (-1.0, True),
    }[region]

    def point(t, s):
        # t along the axis, s across it
        return (s, sign * t) if axis_is_y else (sign * t, s)

    def inner(t):
        if t == 0.0:
            return 0.0
        return _quad(lambda s: f(*point(t, s)), -t, t, spec, points=[0.0])

    return _quad(inner, 0.0, extent, spec)
