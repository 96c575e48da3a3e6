"""Intercept-resend attacks and the disturbance they leave on Bob's data.

Two attacks are modelled:

* simultaneous measurement: Eve splits the pulse 50:50, homodynes x1 on one
  half and x2 on the other, guesses the most likely of the four states and
  resends it;
* intermediate basis: Eve homodynes ``x_{pi/4}`` and resends
  ``|+-alpha e^{i pi/4}>`` according to the sign of her outcome.

The beam-splitting attack only enters through the key gain, see
:mod:`homodyne_qkd.keygain`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

from .core_math import DEFAULT_SPEC, Interval, QuadratureSpec, erfc, integrate_1d
from .protocol import ber_no_eve, postselection_efficiency
from .states import (
    CoherentEnsemble,
    CoherentState,
    QuadratureDistribution,
    distribution_distance,
    four_states,
)

__all__ = [
    "AttackKind",
    "AttackModel",
    "ResendTriple",
    "DisturbedSignal",
    "BerResult",
    "resend_probabilities",
    "simultaneous_attack_signal",
    "ber_simultaneous",
    "eve_ber_intercept",
    "intermediate_attack_signal",
    "ber_intermediate",
    "ideal_wrong_basis_density",
    "wrong_basis_monitor",
]

_SQRT2 = math.sqrt(2.0)
_PEAK = math.sqrt(2.0 / math.pi)


class AttackKind(enum.Enum):
    SIMULTANEOUS = "simultaneous"
    INTERMEDIATE = "intermediate"
    BEAM_SPLITTING = "beam-splitting"


@dataclass(frozen=True)
class AttackModel:
    kind: AttackKind
    loss: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if self.kind is AttackKind.BEAM_SPLITTING:
            if not 0 <= self.loss < 1:
                raise ValueError(f"beam-splitting loss must lie in [0, 1), got {self.loss}")
        elif self.loss != 0.0:
            raise ValueError("loss is only meaningful for the beam-splitting attack")


@dataclass(frozen=True)
class ResendTriple:
    """Probabilities that Eve resends the sent state, one of the two
    perpendicular states (each), or the opposite state."""

    p_plus: float
    p_perp: float
    p_minus: float

    @property
    def total(self) -> float:
        return self.p_plus + 2 * self.p_perp + self.p_minus


@dataclass(frozen=True)
class DisturbedSignal:
    """What reaches Bob under an intercept-resend attack.

    ``correct_basis`` and ``wrong_basis`` are the mixtures Bob holds once the
    basis is announced (averaged over the bit value). ``sent_alpha`` is the
    mixture conditioned on Alice having sent ``|alpha>``, i.e. the view Bob
    gets only after the states themselves are revealed.
    """

    correct_basis: CoherentEnsemble
    wrong_basis: CoherentEnsemble
    sent_alpha: CoherentEnsemble


class BerResult(NamedTuple):
    bob_ber: float
    efficiency: float


def _check_n(n):
    if not n >= 0:
        raise ValueError(f"intensity must be >= 0, got {n}")


def _check(x0, n):
    if not x0 >= 0:
        raise ValueError(f"threshold must be >= 0, got {x0}")
    _check_n(n)


def resend_probabilities(n: float, spec: QuadratureSpec = DEFAULT_SPEC) -> ResendTriple:
    """Cone integrals of Eve's joint outcome density for the simultaneous attack.

    Eve's two outcomes are independent Gaussians (variance 1/4) centred at
    ``(sqrt(n/2), 0)``. Each cone integral is done as a 1-D quadrature along
    the cone axis with the transverse integral in closed form.
    """
    _check_n(n)
    a = math.sqrt(n / 2.0)
    half_line = Interval(0.0, math.inf)

    # x1 >= |x2|: transverse mass of the centred x2 Gaussian is erf(sqrt2 * x1)
    def plus(x):
        return _PEAK * math.exp(-2.0 * (x - a) ** 2) * math.erf(_SQRT2 * x)

    def minus(x):
        return _PEAK * math.exp(-2.0 * (x + a) ** 2) * math.erf(_SQRT2 * x)

    # x2 > |x1|: transverse mass of the displaced x1 Gaussian on [-y, y]
    def perp(y):
        inside = 0.5 * (erfc(_SQRT2 * (-y - a)) - erfc(_SQRT2 * (y - a)))
        return _PEAK * math.exp(-2.0 * y * y) * inside

    p_plus = integrate_1d(plus, half_line, spec, centers=[a])
    p_minus = integrate_1d(minus, half_line, spec, centers=[0.0])
    p_perp = integrate_1d(perp, half_line, spec, centers=[0.0])
    return ResendTriple(p_plus, p_perp, p_minus)


def _ensemble(pairs) -> CoherentEnsemble:
    # quadrature leaves ~1e-10 slack in the weights; ensembles need exact unit mass
    total = math.fsum(w for w, _ in pairs)
    return CoherentEnsemble(tuple((w / total, s) for w, s in pairs))


def simultaneous_attack_signal(n: float, spec: QuadratureSpec = DEFAULT_SPEC) -> DisturbedSignal:
    t = resend_probabilities(n, spec)
    s = four_states(n)
    same = 0.5 * (t.p_plus + t.p_minus)
    correct = _ensemble([(same, s[0]), (same, s[2]), (t.p_perp, s[1]), (t.p_perp, s[3])])
    wrong = _ensemble([(t.p_perp, s[0]), (t.p_perp, s[2]), (same, s[1]), (same, s[3])])
    sent = _ensemble([(t.p_plus, s[0]), (t.p_perp, s[1]), (t.p_minus, s[2]), (t.p_perp, s[3])])
    return DisturbedSignal(correct, wrong, sent)


def ber_simultaneous(x0: float, n: float, spec: QuadratureSpec = DEFAULT_SPEC) -> BerResult:
    """Bob's BER and postselection efficiency under the simultaneous attack."""
    _check(x0, n)
    raw = resend_probabilities(n, spec)
    # renormalise the quadrature slack so the efficiency is exactly 1 at x0 = 0
    t = ResendTriple(raw.p_plus / raw.total, raw.p_perp / raw.total, raw.p_minus / raw.total)
    root = math.sqrt(n)
    centred = erfc(_SQRT2 * x0)
    efficiency = (t.p_plus + t.p_minus) * postselection_efficiency(x0, n) + 2 * t.p_perp * centred
    wrong = (t.p_plus * erfc(_SQRT2 * (x0 + root))
             + t.p_minus * erfc(_SQRT2 * (x0 - root))
             + 2 * t.p_perp * centred)
    return BerResult(wrong / (2 * efficiency), efficiency)


def eve_ber_intercept(n: float) -> float:
    """Eve's error rate for either intercept attack; she effectively sees intensity n/2."""
    _check_n(n)
    return ber_no_eve(0.0, n / 2.0)


def intermediate_attack_signal(n: float) -> DisturbedSignal:
    q_e = eve_ber_intercept(n)
    alpha = math.sqrt(n)
    up = CoherentState(alpha, math.pi / 4)
    down = CoherentState(alpha, -3 * math.pi / 4)
    # Eve's resend does not depend on the basis, so both sifted halves coincide
    averaged = CoherentEnsemble(((0.5, up), (0.5, down)))
    sent = CoherentEnsemble(((1.0 - q_e, up), (q_e, down)))
    return DisturbedSignal(averaged, averaged, sent)


def ber_intermediate(x0: float, n: float) -> BerResult:
    _check(x0, n)
    q_e = eve_ber_intercept(n)
    half = n / 2.0
    efficiency = postselection_efficiency(x0, half)
    bob_ber = ((1.0 - q_e) * ber_no_eve(x0, half)
               + q_e * erfc(_SQRT2 * (x0 - math.sqrt(half))) / (2 * efficiency))
    return BerResult(bob_ber, efficiency)


def ideal_wrong_basis_density() -> QuadratureDistribution:
    """Undisturbed wrong-basis density ``sqrt(2/pi) exp(-2 x^2)``, the same for every n."""
    return QuadratureDistribution(((1.0, 0.0),))


def wrong_basis_monitor(observed: QuadratureDistribution, n: float,
                        spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """L1 distance of an observed wrong-basis density from the undisturbed one.

    No alarm level is applied; callers choose their own.
    """
    _check_n(n)
    return distribution_distance(observed, ideal_wrong_basis_density(), spec)
