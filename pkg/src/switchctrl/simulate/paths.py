"""Mode-process sampling with counter-based per-path seeds."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import ModeTrajectory, SwitchSystem


def path_rng(base_seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for path ``index``: Philox keyed by (base_seed, index)."""
    if not (0 <= base_seed < 2 ** 64 and 0 <= index < 2 ** 64):
        raise ValueError("seeds and path indices must fit in 64 bits")
    return np.random.Generator(np.random.Philox(key=(int(base_seed) << 64) | int(index)))


def _seed_pair(seed) -> tuple:
    if isinstance(seed, tuple):
        return int(seed[0]), int(seed[1])
    return int(seed), 0


@dataclass(frozen=True)
class ModePath:
    """Jump times and post-jump mode indices of one realisation."""

    seed: tuple
    gamma0: int
    times: np.ndarray
    modes: np.ndarray

    @property
    def n_jumps(self) -> int:
        return len(self.times)

    def trajectory(self, cap: int) -> ModeTrajectory:
        e = ModeTrajectory(((0.0, self.gamma0),), cap)
        for t, g in zip(self.times, self.modes):
            e = e.concat(float(t), int(g))
        return e

    def mode_at(self, t):
        """Mode index at time(s) ``t`` (right-continuous)."""
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.times, t, side="right")
        seq = np.concatenate([[self.gamma0], self.modes]).astype(int)
        return seq[k]


def _draw(system: SwitchSystem, rng: np.random.Generator, g0: int):
    times, modes = [], []
    t, g = 0.0, g0
    cdf = np.cumsum(system.Q, axis=1)
    for _ in range(system.M):
        rate = system.lam[g]
        if rate <= 0.0:
            break
        t = t + rng.standard_exponential() / rate
        if t > system.T:
            break
        u = rng.random()
        nxt = int(np.searchsorted(cdf[g], u, side="right"))
        if nxt >= system.p or system.Q[g, nxt] <= 0.0:
            # u landed past a row sum that rounds below 1
            nxt = int(np.flatnonzero(system.Q[g] > 0.0)[-1])
        g = nxt
        times.append(t)
        modes.append(g)
    return np.array(times, dtype=float), np.array(modes, dtype=int)


def sample_mode_path(system: SwitchSystem, seed, gamma0=None) -> ModePath:
    """Sample jump times (exponential clocks with rate ``λ(current mode)``) and
    targets (drawn from ``Q(current mode, ·)``), stopping after ``M`` jumps or
    once the clock passes ``T``."""
    base, index = _seed_pair(seed)
    g0 = system.gamma0_index if gamma0 is None else system.index(gamma0)
    times, modes = _draw(system, path_rng(base, index), g0)
    return ModePath((base, index), g0, times, modes)


def sample_mode_paths(system: SwitchSystem, n_samples: int, base_seed: int,
                      gamma0=None):
    """Padded arrays ``(times (S, M), modes (S, M))`` for paths ``0..S-1``."""
    g0 = system.gamma0_index if gamma0 is None else system.index(gamma0)
    M = system.M
    times = np.full((n_samples, M), np.inf)
    modes = np.full((n_samples, M), -1, dtype=np.int64)
    for i in range(n_samples):
        t, g = _draw(system, path_rng(base_seed, i), g0)
        times[i, :len(t)] = t
        modes[i, :len(g)] = g
    return times, modes


def compensated_integral(system: SwitchSystem, path: ModePath, phi,
                         quad_points: int = 64) -> tuple:
    """``(∫ φ dq, ∫ φ dq̂)`` along one path for a deterministic integrand
    ``φ(t, θ)`` (vectorised in ``t``).

    The compensator is ``λ(γ) Q(γ, θ) dt`` while fewer than ``M`` jumps have
    happened and ``t <= T``; each inter-jump piece is integrated by
    Gauss-Legendre quadrature.
    """
    jumps = sum(phi(np.array([t]), int(g))[0] for t, g in zip(path.times, path.modes))
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    edges = [0.0] + list(path.times)
    if path.n_jumps < system.M:
        edges.append(system.T)
    comp = 0.0
    g = path.gamma0
    for k, (a, b) in enumerate(zip(edges, edges[1:])):
        if k > 0:
            g = int(path.modes[k - 1])
        s = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        for th in range(system.p):
            rate = system.lam[g] * system.Q[g, th]
            if rate > 0.0:
                comp += rate * 0.5 * (b - a) * float(weights @ phi(s, th))
    return float(jumps), float(comp)
