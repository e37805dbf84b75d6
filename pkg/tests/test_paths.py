import numpy as np
import pytest
from scipy import stats

from switchctrl import load_fixture
from switchctrl.simulate import (compensated_integral, path_rng, sample_mode_path,
                                 sample_mode_paths)

from helpers import two_mode


def phi(t, th):
    return np.cos(3.0 * t) + 0.5 * th


def phi_antiderivative(t, th):
    return np.sin(3.0 * t) / 3.0 + 0.5 * th * t


def compensated_batch(system, times, modes):
    """Vectorised ``∫φ dq − ∫φ dq̂`` over padded path arrays (exact antiderivative)."""
    S, M = times.shape
    g0 = system.gamma0_index
    finite = np.isfinite(times)
    jumps = np.where(finite, phi(np.where(finite, times, 0.0), np.maximum(modes, 0)), 0.0).sum(1)
    n = finite.sum(1)
    seq = np.concatenate([np.full((S, 1), g0), np.maximum(modes, 0)], axis=1)
    edges = np.concatenate([np.zeros((S, 1)), np.where(finite, times, system.T)], axis=1)
    comp = np.zeros(S)
    for k in range(M):
        a, b = edges[:, k], edges[:, k + 1]
        live = n >= k           # interval k exists; the gate closes after M jumps
        g = seq[:, k]
        for th in range(system.p):
            rate = system.lam[g] * system.Q[g, th]
            comp += np.where(live, rate * (phi_antiderivative(b, th) - phi_antiderivative(a, th)), 0.0)
    return jumps - comp


class TestSampling:
    def test_first_jump_of_exp33_lands_on_e2(self, exp33):
        _, modes = sample_mode_paths(exp33, 2000, base_seed=1)
        first = modes[:, 0]
        assert np.all(first[first >= 0] == 1)
        # e2 -> e3 -> e2 ...
        second = modes[:, 1]
        assert np.all(second[second >= 0] == 2)

    def test_zero_rate_never_jumps(self, exp33):
        s = exp33.with_overrides(lam=0.0)
        for i in range(50):
            p = sample_mode_path(s, (3, i))
            assert p.n_jumps == 0
            assert np.all(p.mode_at(np.linspace(0, 1, 5)) == 0)

    def test_cap_horizon_and_order(self):
        s = two_mode(np.zeros((2, 2)), np.zeros((2, 2)), [[1.0], [0.0]], lam=8.0, M=3, T=0.7)
        times, modes = sample_mode_paths(s, 3000, base_seed=2)
        finite = np.isfinite(times)
        assert finite.sum(1).max() == 3
        assert np.all(times[finite] <= s.T)
        both = finite[:, 1:] & finite[:, :-1]
        assert np.all(np.diff(np.where(finite, times, 0.0), axis=1)[both] > 0)
        assert np.all(modes[~finite] == -1)

    def test_reproducible_and_consistent(self, exp34):
        a = sample_mode_path(exp34, (9, 17))
        b = sample_mode_path(exp34, (9, 17))
        assert np.array_equal(a.times, b.times) and np.array_equal(a.modes, b.modes)
        times, modes = sample_mode_paths(exp34, 30, base_seed=9)
        k = a.n_jumps
        assert np.array_equal(times[17, :k], a.times)
        assert np.array_equal(modes[17, :k], a.modes)
        assert sample_mode_path(exp34, 9).seed == (9, 0)

    def test_distinct_indices_differ(self):
        assert path_rng(1, 0).random() != path_rng(1, 1).random()
        assert path_rng(1, 0).random() != path_rng(2, 0).random()
        with pytest.raises(ValueError):
            path_rng(-1)

    def test_gamma0_override(self, exp33):
        p = sample_mode_path(exp33, 4, gamma0="e3")
        assert p.gamma0 == 2
        if p.n_jumps:
            assert p.modes[0] == 1

    def test_trajectory_view(self, exp33):
        for i in range(20):
            p = sample_mode_path(exp33, (6, i))
            e = p.trajectory(exp33.M)
            assert e.level == p.n_jumps
            for t in (0.1, 0.5, 0.99):
                assert e.mode_at(t) == int(p.mode_at(t))


def test_clock_survival_matches_horizon_truncation(exp34):
    # P(no jump before T) = e^{-λT}; a binomial check on 2e4 paths
    n = 20000
    times, _ = sample_mode_paths(exp34, n, base_seed=12)
    none = np.isinf(times[:, 0]).mean()
    p = np.exp(-1.0)
    assert abs(none - p) <= 4 * np.sqrt(p * (1 - p) / n)


def test_second_clock_is_exponential():
    s = load_fixture("exp-3-4").with_overrides(T=60.0, lam=2.0)
    times, _ = sample_mode_paths(s, 20000, base_seed=21)
    gaps = times[:, 1] - times[:, 0]
    assert stats.kstest(gaps, stats.expon(scale=0.5).cdf).pvalue > 0.01


def test_library_compensated_integral_matches_closed_form(exp33):
    times, modes = sample_mode_paths(exp33, 200, base_seed=5)
    fast = compensated_batch(exp33, times, modes)
    for i in range(200):
        a, b = compensated_integral(exp33, sample_mode_path(exp33, (5, i)), phi, quad_points=32)
        assert abs((a - b) - fast[i]) <= 1e-12


@pytest.mark.parametrize("name", ["exp-3-3", "exp-3-4"])
def test_compensated_measure_has_zero_mean(name):
    s = load_fixture(name)
    times, modes = sample_mode_paths(s, 100_000, base_seed=5)
    v = compensated_batch(s, times, modes)
    se = v.std(ddof=1) / np.sqrt(len(v))
    assert abs(v.mean()) <= 3 * se
