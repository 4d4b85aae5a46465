import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macoupling.rate import (
    capacity_bits,
    optimal_Q,
    optimal_Q_multicarrier,
    sum_rate,
    water_fill,
    water_fill_multicarrier,
)

from oracles import kkt_residual, logdet_bits, pg_power_allocation


def crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_psd(rng, n, trace):
    A = crandn(rng, n, n)
    Q = A @ A.conj().T
    return Q * trace / np.trace(Q).real


def test_capacity_trivial_cases():
    H = crandn(np.random.default_rng(0), 3, 2)
    assert capacity_bits(H, np.zeros((2, 2)), 1.0) == 0.0
    assert np.isclose(capacity_bits(np.array([[1.0]]), np.array([[5.0]]), 2.0), np.log2(3.5))
    with pytest.raises(ValueError):
        capacity_bits(H, np.diag([1.0, -1.0]), 1.0)
    with pytest.raises(ValueError):
        capacity_bits(H, np.eye(2), 0.0)


def test_capacity_matches_svd_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        H = crandn(rng, 4, 3)
        alloc = optimal_Q(H, 0.3, 2.0)
        s = np.linalg.svd(H, compute_uv=False)[: alloc.powers.size]
        ref = np.log2(1 + s**2 * alloc.powers / 0.3).sum()
        assert np.isclose(capacity_bits(H, alloc.Q, 0.3), ref, rtol=1e-12)
        assert np.isclose(alloc.rate_bits(0.3), ref, rtol=1e-12)
        assert np.isclose(logdet_bits(H, alloc.Q, 0.3), ref, rtol=1e-10)


def test_water_fill_single_and_symmetric():
    a = water_fill([2.0], 0.5, 3.0)
    assert np.allclose(a.powers, [3.0]) and np.isclose(a.mu, 3.0 + 0.5 / 4)
    a = water_fill([1.5] * 4, 0.1, 2.0)
    assert np.allclose(a.powers, 0.5)
    with pytest.raises(ValueError):
        water_fill([1.0], 1.0, 0.0)
    with pytest.raises(ValueError):
        water_fill([0.0, 1.0], 1.0, 1.0)


def test_two_channel_crossover_matches_kkt():
    # the weaker mode becomes active once mu exceeds its floor
    s, sigma2 = np.array([2.0, 0.5]), 1.0
    floors = sigma2 / s**2
    crossover = floors[1] - floors[0]
    below = water_fill(s, sigma2, 0.99 * crossover)
    above = water_fill(s, sigma2, 1.01 * crossover)
    assert below.powers[1] == 0 and np.isclose(below.powers[0], 0.99 * crossover)
    assert above.powers[1] > 0


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), multi=st.booleans())
def test_water_filling_kkt_and_budget(seed, multi):
    rng = np.random.default_rng(seed)
    S = int(rng.integers(2, 6)) if multi else 1
    per = [np.exp(rng.normal(0, 1.5, int(rng.integers(1, 6)))) for _ in range(S)]
    sigma2, p_max = 10 ** rng.uniform(-3, 1), 10 ** rng.uniform(-2, 2)
    allocs = water_fill_multicarrier(per, sigma2, p_max)
    total = sum(a.total for a in allocs)
    assert abs(total - p_max) <= 1e-9 * p_max
    mu = allocs[0].mu
    assert all(a.mu == mu for a in allocs)
    res = kkt_residual(np.concatenate(per) ** 2, sigma2, np.concatenate([a.powers for a in allocs]), mu, p_max)
    assert res < 1e-8


def test_multicarrier_degenerate_cases():
    s = np.array([1.3, 0.4])
    (one,) = water_fill_multicarrier([s], 0.2, 1.0)
    assert np.allclose(one.powers, water_fill(s, 0.2, 1.0).powers)
    same = water_fill_multicarrier([s] * 4, 0.2, 1.0)
    ref = water_fill(s, 0.2, 0.25).powers
    for a in same:
        assert np.allclose(a.powers, ref)


def test_optimal_Q_rank_one_and_trace():
    rng = np.random.default_rng(2)
    u, v = crandn(rng, 3), crandn(rng, 4)
    H = np.outer(u, v.conj())
    a = optimal_Q(H, 0.1, 2.0)
    vhat = v / np.linalg.norm(v)
    assert np.allclose(a.Q, 2.0 * np.outer(vhat, vhat.conj()))
    for _ in range(20):
        H = crandn(rng, 4, 4)
        a = optimal_Q(H, 0.1, 3.0)
        assert abs(np.trace(a.Q).real - 3.0) <= 1e-9 * 3.0
    with pytest.raises(ValueError):
        optimal_Q(np.zeros((2, 2)), 1.0, 1.0)


def test_optimal_Q_beats_random_competitors():
    rng = np.random.default_rng(3)
    H = crandn(rng, 4, 3)
    best = capacity_bits(H, optimal_Q(H, 0.5, 2.0).Q, 0.5)
    for _ in range(100):
        assert capacity_bits(H, random_psd(rng, 3, 2.0), 0.5) <= best + 1e-12


def test_capacity_monotone_in_power():
    H = crandn(np.random.default_rng(4), 3, 3)
    caps = [optimal_Q(H, 1.0, p).rate_bits(1.0) for p in np.logspace(-3, 3, 40)]
    assert np.all(np.diff(caps) >= 0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_reciprocity_of_transmit_and_receive_covariances(seed):
    rng = np.random.default_rng(seed)
    N, M = int(rng.integers(1, 6)), int(rng.integers(1, 6))
    H = crandn(rng, N, M)
    a = optimal_Q(H, 0.7, 2.5)
    assert abs(capacity_bits(H, a.Q, 0.7) - capacity_bits(H.conj().T, a.S, 0.7)) < 1e-10


def test_sum_rate_cases():
    rng = np.random.default_rng(5)
    Hs = [crandn(rng, 2, 2) for _ in range(3)]
    Qs = [random_psd(rng, 2, 1.0) for _ in range(3)]
    plain = sum(capacity_bits(H, Q, 0.4) for H, Q in zip(Hs, Qs))
    assert np.isclose(sum_rate(Hs, Qs, 0.4, 3, 0), plain)
    assert np.isclose(sum_rate(Hs, Qs, 0.4, 3, 1), 0.75 * plain)
    assert sum_rate(Hs, [np.zeros((2, 2))] * 3, 0.4, 3, 1) == 0.0


def test_flat_channel_sum_rate_closed_form():
    rng = np.random.default_rng(6)
    H = crandn(rng, 3, 4)
    S, S_cp, sigma2, p_max = 16, 3, 0.2, 4.0
    allocs = optimal_Q_multicarrier([H] * S, sigma2, p_max)
    sr = sum_rate([H] * S, [a.Q for a in allocs], sigma2, S, S_cp)
    per = optimal_Q(H, sigma2, p_max / S).rate_bits(sigma2)
    assert abs(sr - S / (S + S_cp) * S * per) < 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_multicarrier_matches_projected_gradient(seed):
    rng = np.random.default_rng(seed)
    S = int(rng.integers(1, 17))
    Hs = [crandn(rng, 3, 3) * rng.uniform(0.1, 3) for _ in range(S)]
    sigma2, p_max = 0.3, float(10 ** rng.uniform(-1, 2))
    allocs = optimal_Q_multicarrier(Hs, sigma2, p_max)
    ours = sum(a.rate_bits(sigma2) for a in allocs)
    g2 = np.concatenate([np.linalg.svd(H, compute_uv=False) ** 2 for H in Hs])
    _, ref = pg_power_allocation(g2, sigma2, p_max)
    assert abs(ours - ref) < 1e-6
