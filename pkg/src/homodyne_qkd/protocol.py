"""Sifting, postselection and error rates of the undisturbed protocol."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core_math import erfc, log_erfc

__all__ = [
    "ProtocolParams",
    "BitDecision",
    "Sifting",
    "decide_bit",
    "postselection_efficiency",
    "ber_no_eve",
    "sift",
    "alice_bit",
]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ProtocolParams:
    """Operating point: intensity ``n`` (photons/pulse), threshold ``x0``, transmission ``eta``."""

    intensity: float
    threshold: float = 0.0
    transmission: float = 1.0

    def __post_init__(self):
        if not self.intensity >= 0:
            raise ValueError(f"intensity must be >= 0, got {self.intensity}")
        if not self.threshold >= 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")
        if not 0 < self.transmission <= 1:
            raise ValueError(f"transmission must lie in (0, 1], got {self.transmission}")

    @property
    def loss(self) -> float:
        return 1.0 - self.transmission

    @classmethod
    def from_loss(cls, intensity: float, threshold: float, loss: float) -> ProtocolParams:
        return cls(intensity, threshold, 1.0 - loss)


class BitDecision(enum.Enum):
    ONE = 1
    ZERO = 0
    INCONCLUSIVE = -1


class Sifting(enum.Enum):
    CORRECT = "correct"
    WRONG = "wrong"


def decide_bit(x: float, x0: float) -> BitDecision:
    """Bob's postselected decision; ``|x| <= x0`` is inconclusive."""
    if not x0 >= 0:
        raise ValueError(f"threshold must be >= 0, got {x0}")
    if x > x0:
        return BitDecision.ONE
    if x < -x0:
        return BitDecision.ZERO
    return BitDecision.INCONCLUSIVE


def alice_bit(state_index: int) -> int:
    """|a>, |ia> carry 1; |-a>, |-ia> carry 0."""
    return 1 if state_index in (0, 1) else 0


def sift(alice_choice: int, bob_basis: int) -> Sifting:
    """Classify a pulse by Alice's state index (0..3, phase k*pi/2) and Bob's basis (0 = x1, 1 = x2)."""
    if alice_choice not in (0, 1, 2, 3):
        raise ValueError(f"state index must be 0..3, got {alice_choice}")
    if bob_basis not in (0, 1):
        raise ValueError(f"basis index must be 0 or 1, got {bob_basis}")
    return Sifting.CORRECT if alice_choice % 2 == bob_basis else Sifting.WRONG


def _check(x0, n):
    if not x0 >= 0:
        raise ValueError(f"threshold must be >= 0, got {x0}")
    if not n >= 0:
        raise ValueError(f"intensity must be >= 0, got {n}")


def postselection_efficiency(x0: float, n: float) -> float:
    """Probability that a correct-basis pulse gives ``|x| > x0``."""
    _check(x0, n)
    a = math.sqrt(n)
    return 0.5 * (erfc(_SQRT2 * (x0 + a)) + erfc(_SQRT2 * (x0 - a)))


def ber_no_eve(x0: float, n: float) -> float:
    """Bit error rate among conclusive correct-basis pulses without an eavesdropper.

    Evaluated as ``erfc(u) / (erfc(u) + erfc(v))`` with log-erfc so the ratio
    survives thresholds where both tails underflow.
    """
    _check(x0, n)
    a = math.sqrt(n)
    lu = log_erfc(_SQRT2 * (x0 + a))
    lv = log_erfc(_SQRT2 * (x0 - a))
    return 1.0 / (1.0 + math.exp(lv - lu))
