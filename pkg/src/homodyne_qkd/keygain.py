"""Secure key gain against a beam-splitting eavesdropper.

Eve replaces the lossy line by a lossless one and taps off the lost fraction
``1 - eta`` of every pulse, so she holds a coherent state of intensity
``(1 - eta) n`` and measures it in the announced basis. The privacy
amplification fraction ``tau`` follows from her collision probability, and

    G(x0, n, eta) = 1/2 * P(x0, eta n) * [I_AB(x0, eta n) - tau((1 - eta) n)].
"""
from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import optimize as _sp_optimize

from .core_math import DEFAULT_SPEC, Interval, QuadratureSpec, integrate_1d
from .protocol import ProtocolParams, postselection_efficiency

__all__ = [
    "KeyGainReport",
    "Optimum",
    "SearchGrid",
    "tau",
    "collision_probability",
    "mutual_information",
    "binary_entropy",
    "key_gain",
    "gain",
    "optimize",
    "optimal_threshold",
    "privacy_amplification_bound",
    "bits_to_discard",
    "secure_region",
]

_PEAK = math.sqrt(2.0 / math.pi)
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class KeyGainReport:
    params: ProtocolParams
    efficiency: float
    i_ab: float
    tau: float
    gain: float

    def recomputed_gain(self) -> float:
        return 0.5 * self.efficiency * (self.i_ab - self.tau)


@dataclass(frozen=True)
class Optimum:
    loss: float
    best_x0: float
    best_n: float
    best_G: float
    secure: bool = True


@dataclass(frozen=True)
class SearchGrid:
    """Coarse search box and the refinement tolerance on (x0, n)."""

    x0_max: float = 4.0
    x0_step: float = 0.05
    n_max: float = 4.0
    n_step: float = 0.05
    tol: float = 1e-6

    def x0_values(self) -> np.ndarray:
        k = int(round(self.x0_max / self.x0_step))
        return np.arange(k + 1) * self.x0_step

    def n_values(self) -> np.ndarray:
        k = int(round(self.n_max / self.n_step))
        return np.arange(1, k + 1) * self.n_step


def _check_n(n):
    if not n >= 0:
        raise ValueError(f"intensity must be >= 0, got {n}")


def collision_probability(n_eve: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Eve's expected relative collision probability for intensity ``n_eve``.

    The integrand is the ratio of squared to plain Gaussian mixtures. Both
    underflow together in the tail, so it is evaluated in log form:
    ``exp(-2 (x - a)^2) * (1 + e^{-16 a x}) / (1 + e^{-8 a x})``.
    """
    _check_n(n_eve)
    a = math.sqrt(n_eve)

    def ratio(x):
        log_r = -2.0 * (x - a) ** 2 + math.log1p(math.exp(-16.0 * a * x)) \
            - math.log1p(math.exp(-8.0 * a * x))
        return math.exp(log_r)

    return _PEAK * integrate_1d(ratio, Interval(0.0, math.inf), spec, centers=[a])


@functools.lru_cache(maxsize=4096)
def _tau_cached(n_eve: float, spec: QuadratureSpec) -> float:
    p_c = collision_probability(n_eve, spec)
    return min(max(1.0 + math.log2(p_c), 0.0), 1.0)


def tau(n_eve: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Fraction of the sifted key removed by privacy amplification, ``1 + log2 P_c``."""
    _check_n(n_eve)
    return _tau_cached(float(n_eve), spec)


def binary_entropy(p: float) -> float:
    """``h(p)`` in bits with ``0 log 0 = 0``."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log(p) + (1.0 - p) * math.log1p(-p)) / _LN2


def mutual_information(x0: float, n: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Alice-Bob mutual information per conclusive bit, in bits.

    Bob keeps the full outcome ``x`` (soft decision), so this is the average
    of ``1 - h(P(error | x))`` over the postselected outcome density.
    """
    if not x0 >= 0:
        raise ValueError(f"threshold must be >= 0, got {x0}")
    _check_n(n)
    if n == 0:
        return 0.0
    a = math.sqrt(n)
    eff = postselection_efficiency(x0, n)
    if eff == 0.0:
        # x0 so far out that the tails underflow; I_AB -> 1 in that limit
        return 1.0

    def integrand(x):
        z = 8.0 * a * x
        p_err = math.exp(-z) / (1.0 + math.exp(-z))
        density = 0.5 * _PEAK * (math.exp(-2.0 * (x - a) ** 2) + math.exp(-2.0 * (x + a) ** 2))
        return density * (1.0 - binary_entropy(p_err))

    # absolute tolerance scaled by the efficiency so the ratio keeps its accuracy
    local = QuadratureSpec(max(spec.abs_tol * eff, 1e-300), spec.rel_tol, spec.max_subdivisions)
    half = integrate_1d(integrand, Interval(x0, math.inf), local, centers=[a])
    return min(max(2.0 * half / eff, 0.0), 1.0)


def gain(x0: float, n: float, eta: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Key gain for transmission ``eta`` in [0, 1] (``eta = 0`` allowed for bracketing)."""
    eff = postselection_efficiency(x0, eta * n)
    return 0.5 * eff * (mutual_information(x0, eta * n, spec) - tau((1.0 - eta) * n, spec))


def key_gain(params: ProtocolParams, spec: QuadratureSpec = DEFAULT_SPEC) -> KeyGainReport:
    eta = params.transmission
    n_bob = eta * params.intensity
    n_eve = (1.0 - eta) * params.intensity
    eff = postselection_efficiency(params.threshold, n_bob)
    i_ab = mutual_information(params.threshold, n_bob, spec)
    t = tau(n_eve, spec)
    return KeyGainReport(params, eff, i_ab, t, 0.5 * eff * (i_ab - t))


def _grid_column(args):
    n, x0_values, eta, spec = args
    return [gain(float(x0), float(n), eta, spec) for x0 in x0_values]


def _refine(fun, x, y, step, x_bounds, y_bounds, tol, max_sweeps=200):
    """Coordinate ascent with bounded Brent line searches, starting at (x, y)."""
    best = float(fun(x, y))
    for _ in range(max_sweeps):
        moved = 0.0
        for axis in (0, 1):
            centre = x if axis == 0 else y
            lo_b, hi_b = x_bounds if axis == 0 else y_bounds
            if lo_b == hi_b:
                continue
            lo, hi = max(lo_b, centre - step), min(hi_b, centre + step)
            if axis == 0:
                res = _sp_optimize.minimize_scalar(lambda t: -fun(t, y), bounds=(lo, hi),
                                                   method="bounded", options={"xatol": tol / 10})
            else:
                res = _sp_optimize.minimize_scalar(lambda t: -fun(x, t), bounds=(lo, hi),
                                                   method="bounded", options={"xatol": tol / 10})
            if -res.fun > best:
                moved = max(moved, abs(res.x - centre))
                best = float(-res.fun)
                if axis == 0:
                    x = float(res.x)
                else:
                    y = float(res.x)
        if moved < tol:
            break
    return x, y, best


def optimize(loss: float, search: SearchGrid = SearchGrid(), n: float | None = None,
             spec: QuadratureSpec = DEFAULT_SPEC, jobs: int = 1) -> Optimum:
    """Maximise the key gain over threshold and intensity for a given loss.

    A coarse grid locates the best cell (ties go to the smallest x0, then the
    smallest n), then coordinate ascent refines it to ``search.tol``. Passing
    ``n`` fixes the intensity and only the threshold is optimised.

    If no grid point has a positive gain the least negative point is returned
    with ``secure=False``.
    """
    if not 0 <= loss < 1:
        raise ValueError(f"loss must lie in [0, 1), got {loss}")
    eta = 1.0 - loss
    x0_values = search.x0_values()
    n_values = np.array([n], dtype=float) if n is not None else search.n_values()

    tasks = [(float(v), x0_values, eta, spec) for v in n_values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            columns = list(pool.map(_grid_column, tasks))
    else:
        columns = [_grid_column(t) for t in tasks]
    table = np.array(columns).T  # rows: x0, columns: n
    i, j = np.unravel_index(int(np.argmax(table)), table.shape)
    x_start, n_start = float(x0_values[i]), float(n_values[j])

    n_lo = 1e-9 if n is None else n_start
    n_hi = search.n_max if n is None else n_start
    step = max(search.x0_step, search.n_step)
    x_best, n_best, g_best = _refine(
        lambda x, m: gain(x, m, eta, spec), x_start, n_start, step,
        (0.0, search.x0_max), (n_lo, n_hi), search.tol)
    return Optimum(loss, x_best, n_best, g_best, secure=bool(g_best > 0))


def optimal_threshold(loss: float, n: float, search: SearchGrid = SearchGrid(),
                      spec: QuadratureSpec = DEFAULT_SPEC) -> Optimum:
    """Best threshold for a fixed intensity."""
    return optimize(loss, search, n=n, spec=spec)


def privacy_amplification_bound(s: int) -> float:
    """Upper bound on Eve's Shannon information after discarding ``s`` extra bits."""
    if int(s) != s or s < 0:
        raise ValueError(f"s must be a nonnegative integer, got {s}")
    return 2.0 ** -int(s) / _LN2


def bits_to_discard(target: float) -> int:
    """Smallest ``s`` with ``privacy_amplification_bound(s) <= target``."""
    if not target > 0:
        raise ValueError("target must be positive")
    s = max(0, math.ceil(-math.log2(target * _LN2)))
    # guard against rounding at exact powers of two
    while s > 0 and privacy_amplification_bound(s - 1) <= target:
        s -= 1
    while privacy_amplification_bound(s) > target:
        s += 1
    return s


def secure_region(x0: float, n: float, tol: float = 1e-6,
                  spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Largest loss ``1 - eta`` at which the key gain is still positive.

    The sign of G is the sign of ``I_AB(x0, eta n) - tau((1 - eta) n)``,
    which is monotone in the loss, so plain bisection applies.
    """
    if not x0 >= 0:
        raise ValueError(f"threshold must be >= 0, got {x0}")
    if not n > 0:
        raise ValueError(f"intensity must be > 0, got {n}")

    def margin(loss):
        eta = 1.0 - loss
        return mutual_information(x0, eta * n, spec) - tau(loss * n, spec)

    if margin(0.0) <= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if margin(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo
