import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macoupling.array_model import ArrayGeometry, field_response_matrix, mc_matrix
from macoupling.channel import (
    OfdmGrid,
    PathSet,
    assemble_narrowband,
    assemble_wideband,
    freq_domain_prm,
    time_domain_gain,
    time_domain_taps,
    triangular_pulse,
)
from macoupling.matfun import spd_inv_sqrt, spd_sqrt

from oracles import brute_dft, random_spd

K = 2 * np.pi
F_C = 28e9


def random_paths(rng, L, spread=2e-6):
    return PathSet(
        aod=rng.uniform(-1.4, 1.4, L),
        aoa=rng.uniform(-1.4, 1.4, L),
        delays=1e-6 + rng.uniform(0, spread, L),
        gains=rng.normal(size=L) + 1j * rng.normal(size=L),
    )


def geom(rng, M, d_min=0.2):
    gaps = rng.uniform(0.2, 1.2, M - 1)
    pos = np.concatenate([[0.0], np.cumsum(gaps)])
    return ArrayGeometry(pos, pos[-1] + 0.1, d_min)


def test_pathset_validation_and_roundtrip(tmp_path):
    with pytest.raises(ValueError):
        PathSet([], [], [], [])
    with pytest.raises(ValueError):
        PathSet([0.0], [0.0, 1.0], [0.0], [1.0])
    with pytest.raises(ValueError):
        PathSet([0.0], [0.0], [-1.0], [1.0])
    with pytest.raises(ValueError):
        PathSet([0.0], [0.0], [0.0], [np.inf])
    p = random_paths(np.random.default_rng(0), 7)
    p.meta["distance"] = 123.0
    p.dump(tmp_path / "p.json")
    q = PathSet.load(tmp_path / "p.json")
    for a in ("aod", "aoa", "delays", "gains"):
        assert np.array_equal(getattr(p, a), getattr(q, a))
    assert q.meta == {"distance": 123.0}
    assert set(q.to_dict()["paths"][0]) == {"aod", "aoa", "delay", "gain_re", "gain_im"}


def test_single_antenna_los():
    g = ArrayGeometry([0.0], 0.0, 0.2)
    ch = assemble_narrowband(g, g, PathSet([0.3], [-0.2], [0.0], [1.0]), K)
    assert np.allclose(ch.H, [[1.0]])


def test_half_wavelength_arrays_drop_coupling():
    rng = np.random.default_rng(1)
    t = ArrayGeometry(np.arange(4) * 0.5, 1.5, 0.5)
    r = ArrayGeometry(np.arange(3) * 0.5, 1.0, 0.5)
    p = random_paths(rng, 9)
    H = assemble_narrowband(t, r, p, K).H
    ref = field_response_matrix(r, p.aoa, K).conj().T @ np.diag(p.gains) @ field_response_matrix(t, p.aod, K)
    assert np.abs(H - ref).max() < 1e-12 * np.abs(ref).max()


@pytest.mark.parametrize("seed", range(10))
def test_reconstruction_from_cached_factors(seed):
    rng = np.random.default_rng(seed)
    t, r, p = geom(rng, 5), geom(rng, 4), random_paths(rng, 12)
    ch = assemble_narrowband(t, r, p, K)
    direct = (spd_inv_sqrt(mc_matrix(r, K)) @ field_response_matrix(r, p.aoa, K).conj().T
              @ np.diag(p.gains) @ field_response_matrix(t, p.aod, K) @ spd_inv_sqrt(mc_matrix(t, K)))
    assert np.linalg.norm(ch.reconstruct() - ch.Hs) <= 1e-12 * np.linalg.norm(ch.Hs)
    assert np.linalg.norm(ch.H - direct) <= 1e-12 * np.linalg.norm(direct)


def test_power_conservation_identity():
    rng = np.random.default_rng(5)
    for n in (2, 5, 8):
        C = random_spd(rng, n, 1e3)
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        Q = A @ A.conj().T
        W = spd_inv_sqrt(C)
        assert np.isclose(np.trace(C @ W @ Q @ W).real, np.trace(Q).real, rtol=1e-10)
        S = spd_sqrt(C)
        assert np.allclose(S @ W, np.eye(n), atol=1e-10)


def test_grid_invariants():
    with pytest.raises(ValueError):
        OfdmGrid(0, 15e3, 0)
    with pytest.raises(ValueError):
        OfdmGrid(4, 0.0, 0)
    p = PathSet([0, 0], [0, 0], [1e-6, 1e-6 + 2.5 / (16 * 15e3)], [1, 1])
    grid = OfdmGrid.for_paths(16, 15e3, p)
    assert grid.T == 3 and grid.S_cp == 3
    assert np.isclose(grid.cp_factor, 16 / 19)
    # integer products are not bumped up by round-off
    p2 = PathSet([0, 0], [0, 0], [0.0, 2.0 / (16 * 15e3)], [1, 1])
    assert OfdmGrid.for_paths(16, 15e3, p2).T == 2


def test_triangular_pulse():
    assert np.allclose(triangular_pulse([-1.5, -1, -0.5, 0, 0.25, 1, 2]),
                       [0, 0, 0.5, 1, 0.75, 0, 0])


def test_earliest_path_occupies_tap_zero_only():
    p = PathSet([0, 0], [0, 0], [1e-6, 1e-6 + 2.2 / (8 * 15e3)], [2 - 1j, 1])
    grid = OfdmGrid.for_paths(8, 15e3, p)
    assert np.isclose(time_domain_gain(p, 0, 0, grid, F_C), 2 - 1j)
    for tap in range(1, grid.T + 1):
        assert time_domain_gain(p, 0, tap, grid, F_C) == 0
    with pytest.raises(ValueError):
        time_domain_gain(p, 0, grid.T + 1, grid, F_C)


def test_half_tap_offset_splits_energy():
    p = PathSet([0, 0], [0, 0], [0.0, 0.5 / (8 * 15e3)], [1, 3j])
    grid = OfdmGrid.for_paths(8, 15e3, p)
    assert np.isclose(abs(time_domain_gain(p, 1, 0, grid, F_C)), 1.5)
    assert np.isclose(abs(time_domain_gain(p, 1, 1, grid, F_C)), 1.5)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), S=st.integers(1, 32))
def test_every_path_has_a_nonzero_tap(seed, S):
    p = random_paths(np.random.default_rng(seed), 6)
    grid = OfdmGrid.for_paths(S, 15e3, p)
    taps = time_domain_taps(p, grid, F_C)
    assert np.all(np.abs(taps).max(axis=0) > 0)
    for l in range(p.L):
        for tap in range(grid.T + 1):
            assert np.isclose(taps[tap, l], time_domain_gain(p, l, tap, grid, F_C))


def test_flat_channel_prm():
    p = PathSet([0.1, 0.2], [0.3, 0.4], [2e-6, 2e-6], [1 + 1j, -0.5])
    grid = OfdmGrid.for_paths(12, 15e3, p)
    assert grid.T == 0
    b = freq_domain_prm(p, grid, F_C)
    assert np.allclose(b, p.gains[None, :])


def test_single_tap_dft_progression():
    S, tau0 = 8, 3
    p = PathSet([0, 0], [0, 0], [0.0, tau0 / (S * 15e3)], [1e-9, 0.7j])
    grid = OfdmGrid.for_paths(S, 15e3, p)
    b = freq_domain_prm(p, grid, F_C)[:, 1]
    g = time_domain_gain(p, 1, tau0, grid, F_C)
    assert np.allclose(b, g * np.exp(-2j * np.pi * np.arange(S) * tau0 / S))
    assert np.allclose(np.abs(b), 0.7)


@pytest.mark.parametrize("seed", range(5))
def test_prm_matches_brute_force_dft_and_parseval(seed):
    p = random_paths(np.random.default_rng(seed), 10)
    grid = OfdmGrid.for_paths(16, 15e3, p)
    taps = time_domain_taps(p, grid, F_C)
    b = freq_domain_prm(p, grid, F_C)
    assert np.allclose(b, brute_dft(taps, grid.S), atol=1e-12)
    if grid.T + 1 <= grid.S:
        lhs = (np.abs(b) ** 2).sum(axis=0)
        rhs = grid.S * (np.abs(taps) ** 2).sum(axis=0)
        assert np.allclose(lhs, rhs, rtol=1e-10)


def test_wideband_single_carrier_matches_narrowband():
    rng = np.random.default_rng(3)
    t, r = geom(rng, 4), geom(rng, 3)
    p = random_paths(rng, 5).with_delays(np.full(5, 1e-6))
    wb = assemble_wideband(t, r, p, OfdmGrid.for_paths(1, 15e3, p), K, F_C)
    nb = assemble_narrowband(t, r, p, K)
    assert np.abs(wb.Hs - nb.Hs).max() <= 1e-15 * np.abs(nb.Hs).max()


def test_wideband_shares_factors_and_flat_carriers_agree():
    rng = np.random.default_rng(4)
    t, r = geom(rng, 4), geom(rng, 4)
    p = random_paths(rng, 6).with_delays(np.full(6, 3e-7))
    wb = assemble_wideband(t, r, p, OfdmGrid.for_paths(8, 15e3, p), K, F_C)
    assert np.allclose(wb.Hs, wb.Hs[0][None], atol=0)
    q = random_paths(rng, 6)
    wb = assemble_wideband(t, r, q, OfdmGrid.for_paths(8, 15e3, q), K, F_C)
    for nu in range(8):
        sig = freq_domain_prm(q, OfdmGrid.for_paths(8, 15e3, q), F_C)[nu]
        direct = assemble_narrowband(t, r, q.with_gains(sig), K).H
        assert np.linalg.norm(wb.Hs[nu] - direct) <= 1e-12 * np.linalg.norm(direct)
    with pytest.raises(AttributeError):
        wb.H
