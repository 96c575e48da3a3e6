import math

import numpy as np
import pytest
from scipy.special import erfc as sp_erfc
from scipy.stats import chisquare

from homodyne_qkd.attacks import AttackModel, ber_intermediate, ber_simultaneous, eve_ber_intercept
from homodyne_qkd.montecarlo import HIST_EDGES, SimConfig, simulate, simulate_eve_bs
from homodyne_qkd.protocol import ProtocolParams, ber_no_eve, postselection_efficiency
from oracles import FROZEN_QE_ONE, FROZEN_Q_ZERO_ONE


def within(sim, q, P, k=3.0):
    return abs(sim.empirical_q - q) <= k * sim.std_err_q and abs(sim.empirical_P - P) <= k * sim.std_err_P


def test_same_seed_same_result():
    cfg = SimConfig(300_000, ProtocolParams(1.0, 0.3), rng_seed=42, shard_size=50_000)
    a, b = simulate(cfg), simulate(cfg)
    assert (a.sifted, a.conclusive, a.errors) == (b.sifted, b.conclusive, b.errors)
    assert np.array_equal(a.wrong_basis_histogram, b.wrong_basis_histogram)


def test_different_seed_different_result():
    a = simulate(SimConfig(100_000, ProtocolParams(1.0), rng_seed=1))
    b = simulate(SimConfig(100_000, ProtocolParams(1.0), rng_seed=2))
    assert (a.sifted, a.errors) != (b.sifted, b.errors)


def test_thread_count_does_not_change_result():
    cfg = SimConfig(400_000, ProtocolParams(0.8, 0.2), AttackModel("simultaneous"),
                    rng_seed=3, shard_size=60_000)
    a, b = simulate(cfg, jobs=1), simulate(cfg, jobs=4)
    assert (a.sifted, a.errors, a.eve_errors) == (b.sifted, b.errors, b.eve_errors)
    assert np.array_equal(a.wrong_basis_histogram, b.wrong_basis_histogram)


def test_sifting_rate_is_half():
    sim = simulate(SimConfig(1_000_000, ProtocolParams(1.0), rng_seed=4))
    se = math.sqrt(0.25 / sim.pulses)
    assert abs(sim.sifted / sim.pulses - 0.5) < 3 * se
    assert sim.sifted + sim.wrong_basis_histogram.sum() <= sim.pulses


def test_vacuum_gives_coin_flips():
    sim = simulate(SimConfig(1_000_000, ProtocolParams(0.0), rng_seed=5))
    assert abs(sim.empirical_q - 0.5) < 3 * sim.std_err_q


def test_no_eve_matches_closed_form():
    sim = simulate(SimConfig(2_000_000, ProtocolParams(1.0), rng_seed=6))
    assert within(sim, FROZEN_Q_ZERO_ONE, 1.0)
    assert sim.empirical_P == 1.0


def test_no_eve_with_loss_and_threshold():
    p = ProtocolParams.from_loss(1.0, 0.4, 0.3)
    sim = simulate(SimConfig(2_000_000, p, rng_seed=8))
    n_bob = 0.7
    assert within(sim, ber_no_eve(0.4, n_bob), postselection_efficiency(0.4, n_bob))


def _bin_probabilities(edges, mean):
    cdf_tail = 0.5 * sp_erfc(math.sqrt(2) * (edges - mean))
    probs = cdf_tail[:-1] - cdf_tail[1:]
    # mass outside the histogram range is folded into the end bins
    probs[0] += 1 - cdf_tail[0]
    probs[-1] += cdf_tail[-1]
    return probs


def _merge_low(observed, expected, floor=5.0):
    obs, exp = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= floor:
            obs.append(o_acc)
            exp.append(e_acc)
            o_acc = e_acc = 0.0
    obs[-1] += o_acc
    exp[-1] += e_acc
    return np.array(obs), np.array(exp)


@pytest.mark.parametrize("n,loss", [(1.0, 0.0), (2.0, 0.5)])
def test_wrong_basis_histogram_goodness_of_fit(n, loss):
    sim = simulate(SimConfig(1_000_000, ProtocolParams.from_loss(n, 0.0, loss), rng_seed=9))
    counts = sim.wrong_basis_histogram.astype(float)
    # pulses outside [-5, 5] are dropped by the histogram; their expected count is ~1e-23
    expected = counts.sum() * _bin_probabilities(HIST_EDGES, 0.0)
    obs, exp = _merge_low(counts, expected)
    exp *= obs.sum() / exp.sum()
    assert chisquare(obs, exp).pvalue > 0.001


def test_wrong_basis_histogram_detects_simultaneous_attack():
    sim = simulate(SimConfig(1_000_000, ProtocolParams(1.0), AttackModel("simultaneous"), rng_seed=10))
    counts = sim.wrong_basis_histogram.astype(float)
    obs, exp = _merge_low(counts, counts.sum() * _bin_probabilities(HIST_EDGES, 0.0))
    exp *= obs.sum() / exp.sum()
    assert chisquare(obs, exp).pvalue < 1e-6


def test_intermediate_attack_matches_closed_form():
    sim = simulate(SimConfig(2_000_000, ProtocolParams(1.0), AttackModel("intermediate"), rng_seed=12))
    res = ber_intermediate(0.0, 1.0)
    assert within(sim, res.bob_ber, res.efficiency)
    se = math.sqrt(FROZEN_QE_ONE * (1 - FROZEN_QE_ONE) / sim.eve_decided)
    assert abs(sim.eve_ber - eve_ber_intercept(1.0)) < 3 * se


def test_simultaneous_attack_matches_closed_form():
    sim = simulate(SimConfig(2_000_000, ProtocolParams(2.0, 0.3), AttackModel("simultaneous"), rng_seed=14))
    res = ber_simultaneous(0.3, 2.0)
    assert within(sim, res.bob_ber, res.efficiency)
    q = eve_ber_intercept(2.0)
    assert abs(sim.eve_ber - q) < 3 * math.sqrt(q * (1 - q) / sim.eve_decided)


def test_no_attack_has_no_eve_statistics():
    assert simulate(SimConfig(1000, ProtocolParams(1.0))).eve_ber is None


@pytest.mark.parametrize("loss", [0.0, 0.5, 0.99])
def test_beam_splitting_eve(loss):
    n = 1.0
    cfg = SimConfig(1_000_000, ProtocolParams.from_loss(n, 0.0, loss),
                    AttackModel("beam-splitting", loss), rng_seed=15)
    got = simulate_eve_bs(cfg, loss)
    expected = ber_no_eve(0.0, loss * n)
    assert abs(got - expected) < 3 * math.sqrt(expected * (1 - expected) / cfg.pulses)
    if loss == 0.5:
        assert expected == pytest.approx(FROZEN_QE_ONE, rel=1e-13)
    if loss == 0.0:
        assert expected == 0.5


def test_beam_splitting_stream_is_independent():
    cfg = SimConfig(100_000, ProtocolParams.from_loss(1.0, 0.0, 0.5), rng_seed=16)
    assert simulate_eve_bs(cfg, 0.5) == simulate_eve_bs(cfg, 0.5)
    with pytest.raises(ValueError):
        simulate_eve_bs(cfg, 1.0)


def test_config_validation():
    p = ProtocolParams(1.0)
    with pytest.raises(ValueError):
        SimConfig(0, p)
    with pytest.raises(ValueError):
        SimConfig(10, p, rng_seed=-1)
    with pytest.raises(ValueError):
        SimConfig(10, p, shard_size=0)
    with pytest.raises(ValueError):
        SimConfig(10, p, AttackModel("beam-splitting", 0.3))


def test_shard_plan_covers_every_pulse():
    cfg = SimConfig(1_000_001, ProtocolParams(1.0), shard_size=1 << 18)
    plan = cfg.shard_plan()
    assert sum(plan) == 1_000_001
    assert simulate(SimConfig(1234, ProtocolParams(1.0), shard_size=100)).pulses == 1234
