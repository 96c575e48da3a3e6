"""Pulse-by-pulse simulation of the protocol, used as an independent oracle.

Homodyne outcomes of coherent states are drawn directly as Gaussians with
variance 1/4 around the displaced quadrature. Random numbers come from
numpy's counter-based Philox generator; the pulse range is cut into fixed
shards, each seeded from ``SeedSequence(rng_seed).spawn``, so results are
bit-identical for a given seed and shard size no matter how many threads
run the shards.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .attacks import AttackKind, AttackModel
from .protocol import ProtocolParams

__all__ = [
    "HIST_EDGES",
    "SimConfig",
    "SimResult",
    "simulate",
    "simulate_eve_bs",
]

HIST_EDGES = np.linspace(-5.0, 5.0, 201)  # bin width 0.05
DEFAULT_SHARD = 1 << 18
_HALF_PI = math.pi / 2


@dataclass(frozen=True)
class SimConfig:
    pulses: int
    params: ProtocolParams
    attack: AttackModel | None = None
    rng_seed: int = 0
    shard_size: int = DEFAULT_SHARD

    def __post_init__(self):
        if int(self.pulses) != self.pulses or self.pulses < 1:
            raise ValueError(f"pulses must be a positive integer, got {self.pulses}")
        if not 0 <= self.rng_seed < 2 ** 64:
            raise ValueError("rng_seed must be an unsigned 64-bit integer")
        if self.shard_size < 1:
            raise ValueError("shard_size must be positive")
        if self.attack is not None and self.attack.kind is AttackKind.BEAM_SPLITTING:
            if abs(self.params.loss - self.attack.loss) > 1e-12:
                raise ValueError("beam-splitting loss must match the channel loss in params")

    def shard_plan(self) -> list[int]:
        full, rest = divmod(int(self.pulses), self.shard_size)
        return [self.shard_size] * full + ([rest] if rest else [])


@dataclass
class SimResult:
    pulses: int
    sifted: int
    conclusive: int
    errors: int
    wrong_basis_histogram: np.ndarray = field(
        default_factory=lambda: np.zeros(len(HIST_EDGES) - 1, dtype=np.int64))
    # Eve's hard decisions on sifted pulses (intercept-resend attacks only)
    eve_decided: int = 0
    eve_errors: int = 0

    @property
    def empirical_P(self) -> float:
        return self.conclusive / self.sifted if self.sifted else 0.0

    @property
    def empirical_q(self) -> float:
        return self.errors / self.conclusive if self.conclusive else 0.0

    @property
    def std_err_P(self) -> float:
        p = self.empirical_P
        return math.sqrt(p * (1 - p) / self.sifted) if self.sifted else 0.0

    @property
    def std_err_q(self) -> float:
        q = self.empirical_q
        return math.sqrt(q * (1 - q) / self.conclusive) if self.conclusive else 0.0

    @property
    def eve_ber(self) -> float | None:
        return self.eve_errors / self.eve_decided if self.eve_decided else None

    def merge(self, other: SimResult) -> SimResult:
        return SimResult(
            self.pulses + other.pulses,
            self.sifted + other.sifted,
            self.conclusive + other.conclusive,
            self.errors + other.errors,
            self.wrong_basis_histogram + other.wrong_basis_histogram,
            self.eve_decided + other.eve_decided,
            self.eve_errors + other.eve_errors,
        )


def _resend_simultaneous(rng, alpha, theta):
    half = alpha / math.sqrt(2.0)
    x1 = half * np.cos(theta) + 0.5 * rng.standard_normal(theta.shape)
    x2 = half * np.sin(theta) + 0.5 * rng.standard_normal(theta.shape)
    ax1, ax2 = np.abs(x1), np.abs(x2)
    # tie rules follow the decision table: >= for +-alpha, > for +-i alpha
    guess = np.select([x1 >= ax2, x2 > ax1, -x1 >= ax2], [0, 1, 2], default=3)
    return guess * _HALF_PI, x1, x2


def _resend_intermediate(rng, alpha, theta):
    x = alpha * np.cos(theta - math.pi / 4) + 0.5 * rng.standard_normal(theta.shape)
    phase = np.where(x >= 0, math.pi / 4, -3 * math.pi / 4)
    return phase, x


def _run_shard(m: int, config: SimConfig, seed: np.random.SeedSequence) -> SimResult:
    rng = np.random.Generator(np.random.Philox(seed))
    p = config.params
    alpha = math.sqrt(p.intensity)
    k = rng.integers(0, 4, m)
    basis = rng.integers(0, 2, m)
    theta = k * _HALF_PI
    phi = basis * _HALF_PI
    bit = k < 2
    correct = (k % 2) == basis

    eve_bit = None
    kind = config.attack.kind if config.attack is not None else None
    if kind is AttackKind.SIMULTANEOUS:
        sent_phase, x1, x2 = _resend_simultaneous(rng, alpha, theta)
        # after sifting Eve reads the half she measured in Alice's basis
        eve_bit = np.where(k % 2 == 0, x1, x2) >= 0
    elif kind is AttackKind.INTERMEDIATE:
        sent_phase, x_eve = _resend_intermediate(rng, alpha, theta)
        eve_bit = x_eve >= 0
    else:
        sent_phase = theta

    mean = math.sqrt(p.transmission) * alpha * np.cos(sent_phase - phi)
    x = mean + 0.5 * rng.standard_normal(m)

    xc, bc = x[correct], bit[correct]
    one = xc > p.threshold
    conclusive = one | (xc < -p.threshold)
    errors = conclusive & (one != bc)
    hist, _ = np.histogram(x[~correct], bins=HIST_EDGES)

    eve_decided = eve_errors = 0
    if eve_bit is not None:
        eve_decided = int(correct.sum())
        eve_errors = int((eve_bit[correct] != bc).sum())
    return SimResult(m, int(correct.sum()), int(conclusive.sum()), int(errors.sum()),
                     hist.astype(np.int64), eve_decided, eve_errors)


def simulate(config: SimConfig, jobs: int = 1) -> SimResult:
    """Run the protocol for ``config.pulses`` pulses and tally Bob's statistics."""
    plan = config.shard_plan()
    seeds = np.random.SeedSequence(config.rng_seed).spawn(len(plan))
    if jobs > 1 and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda a: _run_shard(a[0], config, a[1]), zip(plan, seeds)))
    else:
        parts = [_run_shard(m, config, s) for m, s in zip(plan, seeds)]
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total


def simulate_eve_bs(config: SimConfig, loss: float) -> float:
    """Eve's empirical BER in the beam-splitting attack.

    Eve keeps the fraction ``loss`` of each pulse, waits for the basis
    announcement and reads the sign of the announced quadrature.
    """
    if not 0 <= loss < 1:
        raise ValueError(f"loss must lie in [0, 1), got {loss}")
    amp = math.sqrt(loss * config.params.intensity)
    plan = config.shard_plan()
    # separate stream from simulate() so the two never share draws
    seeds = np.random.SeedSequence([config.rng_seed, 0xB5]).spawn(len(plan))
    errors = 0
    for m, s in zip(plan, seeds):
        rng = np.random.Generator(np.random.Philox(s))
        k = rng.integers(0, 4, m)
        sign = np.where(k < 2, 1.0, -1.0)
        x = sign * amp + 0.5 * rng.standard_normal(m)
        errors += int(((x >= 0) != (k < 2)).sum())
    return errors / config.pulses
