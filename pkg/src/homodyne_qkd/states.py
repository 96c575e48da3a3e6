"""Homodyne statistics of coherent states and their mixtures.

Density operators are never built as matrices. A mixture of coherent states
is described by what balanced homodyne detection sees: a mixture of Gaussians,
each with variance 1/4 (the convention ``a = x1 + i x2``, ``[x1, x2] = i/2``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core_math import DEFAULT_SPEC, Interval, QuadratureSpec, erfc, integrate_1d

__all__ = [
    "QUADRATURE_VARIANCE",
    "CoherentState",
    "CoherentEnsemble",
    "QuadratureDistribution",
    "quadrature_density",
    "ensemble_density",
    "tail_mass",
    "distribution_distance",
    "four_states",
    "rho_correct",
    "rho_wrong",
    "rho_four",
]

QUADRATURE_VARIANCE = 0.25
_PEAK = math.sqrt(2.0 / math.pi)
_SQRT2 = math.sqrt(2.0)


def _canonical_phase(theta: float) -> float:
    t = math.remainder(theta, 2 * math.pi)  # in [-pi, pi]
    return -math.pi if t >= math.pi else t


@dataclass(frozen=True)
class CoherentState:
    """Coherent state ``|amplitude * exp(i phase)>``; phase kept in [-pi, pi)."""

    amplitude: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.amplitude >= 0.0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "phase", _canonical_phase(float(self.phase)))

    @property
    def intensity(self) -> float:
        return self.amplitude ** 2


@dataclass(frozen=True)
class CoherentEnsemble:
    """Convex mixture of coherent states, ``sum_k w_k |s_k><s_k|``."""

    components: tuple[tuple[float, CoherentState], ...]

    def __post_init__(self):
        comps = tuple((float(w), s) for w, s in self.components)
        if not comps:
            raise ValueError("ensemble needs at least one component")
        if any(w < 0 for w, _ in comps):
            raise ValueError("ensemble weights must be nonnegative")
        total = math.fsum(w for w, _ in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"ensemble weights sum to {total!r}, not 1")
        object.__setattr__(self, "components", comps)

    @classmethod
    def uniform(cls, states: Sequence[CoherentState]) -> CoherentEnsemble:
        w = 1.0 / len(states)
        return cls(tuple((w, s) for s in states))


@dataclass(frozen=True)
class QuadratureDistribution:
    """Gaussian-mixture density over the quadrature line.

    ``terms`` holds ``(weight, mean)`` pairs; every term has variance 1/4.
    Instances are callable on scalars or numpy arrays.
    """

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "terms",
                           tuple((float(w), float(m)) for w, m in self.terms))

    @property
    def variance(self) -> float:
        return QUADRATURE_VARIANCE

    @property
    def means(self) -> list[float]:
        return [m for _, m in self.terms]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, m in self.terms:
            out += w * _PEAK * np.exp(-2.0 * (x - m) ** 2)
        return out if out.ndim else float(out)

    def _scalar(self, x: float) -> float:
        return math.fsum(w * _PEAK * math.exp(-2.0 * (x - m) ** 2) for w, m in self.terms)

    def mass(self, over: Interval, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
        """Probability of an outcome in ``over``, by numerical quadrature."""
        return integrate_1d(self._scalar, over, spec, centers=self.means)

    def above(self, t: float) -> float:
        """Closed-form ``P(x > t)``."""
        return math.fsum(0.5 * w * erfc(_SQRT2 * (t - m)) for w, m in self.terms)

    def below(self, t: float) -> float:
        """Closed-form ``P(x < t)``."""
        return math.fsum(0.5 * w * erfc(_SQRT2 * (m - t)) for w, m in self.terms)


def quadrature_density(state: CoherentState, basis_angle: float) -> QuadratureDistribution:
    """Outcome density for measuring ``x1 cos(phi) + x2 sin(phi)`` on a coherent state."""
    mean = state.amplitude * math.cos(state.phase - basis_angle)
    return QuadratureDistribution(((1.0, mean),))


def ensemble_density(ens: CoherentEnsemble, basis_angle: float) -> QuadratureDistribution:
    terms = []
    for w, s in ens.components:
        (_, mean), = quadrature_density(s, basis_angle).terms
        terms.append((w, mean))
    return QuadratureDistribution(tuple(terms))


def tail_mass(dist: QuadratureDistribution, threshold: float) -> tuple[float, float]:
    """Return ``(P(x < -threshold), P(x > threshold))``."""
    if not threshold >= 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    return dist.below(-threshold), dist.above(threshold)


def distribution_distance(a: QuadratureDistribution, b: QuadratureDistribution,
                          spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """L1 distance ``int |a(x) - b(x)| dx``, in [0, 2]."""
    if sorted(a.terms) == sorted(b.terms):
        return 0.0
    centers = a.means + b.means

    def gap(x):
        return abs(a._scalar(x) - b._scalar(x))

    value = integrate_1d(gap, Interval(-math.inf, math.inf), spec, centers=centers)
    return min(max(value, 0.0), 2.0)


def four_states(n: float) -> list[CoherentState]:
    """Alice's alphabet ``|a>, |ia>, |-a>, |-ia>`` for intensity ``n = a^2``."""
    if not n >= 0:
        raise ValueError(f"intensity must be >= 0, got {n}")
    a = math.sqrt(n)
    return [CoherentState(a, k * math.pi / 2) for k in range(4)]


def rho_correct(n: float) -> CoherentEnsemble:
    """``(|a><a| + |-a><-a|) / 2``: the x1-encoded pair."""
    s = four_states(n)
    return CoherentEnsemble.uniform([s[0], s[2]])


def rho_wrong(n: float) -> CoherentEnsemble:
    """``(|ia><ia| + |-ia><-ia|) / 2``: the x2-encoded pair."""
    s = four_states(n)
    return CoherentEnsemble.uniform([s[1], s[3]])


def rho_four(n: float) -> CoherentEnsemble:
    return CoherentEnsemble.uniform(four_states(n))
