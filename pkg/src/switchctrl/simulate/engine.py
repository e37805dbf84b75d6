"""Monte-Carlo front end: single paths, projected dual cost, duality residual."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from ..errors import NumericalError
from ..model import ModeTrajectory, SwitchSystem
from . import backend as _backend
from .paths import ModePath, sample_mode_path, sample_mode_paths
from .policies import DualPolicy, PrimalPolicy
from .tables import dual_model, joint_model, primal_model

STEPS_PER_UNIT = 2000
MIN_MC_SAMPLES = 100


def default_grid_steps(T: float) -> int:
    return max(100, int(math.ceil(STEPS_PER_UNIT * T)))


@dataclass(frozen=True, eq=False)
class SamplePath:
    seed: tuple
    modes: tuple                  # mode labels of the system
    gamma0: int
    jump_times: np.ndarray
    jump_modes: np.ndarray        # post-jump mode indices
    grid: np.ndarray
    states: np.ndarray            # (L+1, N) on the grid
    pre_jump: np.ndarray          # (n_jumps, N)
    post_jump: np.ndarray
    integrals: dict = field(default_factory=dict)

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]

    @property
    def n_jumps(self) -> int:
        return len(self.jump_times)

    def mode_path(self) -> ModePath:
        return ModePath(self.seed, self.gamma0, self.jump_times, self.jump_modes)

    def trajectory(self, cap: int) -> ModeTrajectory:
        return self.mode_path().trajectory(cap)

    def modes_on_grid(self) -> np.ndarray:
        return self.mode_path().mode_at(self.grid)


class MCEstimate(NamedTuple):
    mean: float
    std_error: float
    n_samples: int
    base_seed: int


def _estimate(values: np.ndarray, base_seed: int) -> MCEstimate:
    n = len(values)
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return MCEstimate(float(np.mean(values)), se, n, int(base_seed))


def _check_finite(*arrays) -> None:
    for a in arrays:
        if a is not None and not np.all(np.isfinite(a)):
            raise NumericalError("non-finite state during simulation")


def _vector(system: SwitchSystem, v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (system.N,):
        raise ValueError(f"{name} must have shape ({system.N},), got {v.shape}")
    return v


def _paths_from_batch(system, L, jt, jm, acc, pre, post, snaps, base_seed,
                      integral_names):
    grid = np.linspace(0.0, system.T, L + 1)
    out = []
    for i in range(len(jt)):
        k = int(np.sum(np.isfinite(jt[i])))
        out.append(SamplePath(
            seed=(int(base_seed), i), modes=system.modes, gamma0=system.gamma0_index,
            jump_times=jt[i, :k].copy(), jump_modes=jm[i, :k].copy(), grid=grid,
            states=snaps[i], pre_jump=pre[i, :k], post_jump=post[i, :k],
            integrals={n: float(acc[i, a]) for a, n in enumerate(integral_names)}))
    return out


def _single(system, model, z0, seed, L, backend, integral_names):
    mp = sample_mode_path(system, seed)
    M = system.M
    jt = np.full((1, M), np.inf)
    jm = np.full((1, M), -1, dtype=np.int64)
    jt[0, :mp.n_jumps] = mp.times
    jm[0, :mp.n_jumps] = mp.modes
    _zT, acc, pre, post, snaps = _backend.run(model, z0[None], mp.gamma0, jt, jm,
                                              system.T, record=True, backend=backend)
    _check_finite(snaps, acc)
    sp = _paths_from_batch(system, L, jt, jm, acc, pre, post, snaps, mp.seed[0],
                           integral_names)[0]
    return replace(sp, seed=mp.seed)


def simulate_primal(system: SwitchSystem, x0, policy: PrimalPolicy, seed,
                    grid_steps: int | None = None, backend: str | None = None) -> SamplePath:
    """One path of the controlled primal system; ``seed`` is ``base`` or ``(base, index)``."""
    x0 = _vector(system, x0, "x0")
    L = grid_steps or default_grid_steps(system.T)
    policy.bind(system)
    return _single(system, primal_model(system, policy, L), x0, seed, L, backend,
                   ("state_energy",))


def simulate_dual(system: SwitchSystem, y0, policy: DualPolicy, seed,
                  grid_steps: int | None = None, backend: str | None = None) -> SamplePath:
    """One path of the dual forward system; ``integrals['cost']`` is its projected cost."""
    y0 = _vector(system, y0, "y0")
    L = grid_steps or default_grid_steps(system.T)
    policy.bind(system)
    return _single(system, dual_model(system, policy, L), y0, seed, L, backend, ("cost",))


def simulate_primal_paths(system: SwitchSystem, x0, policy: PrimalPolicy, n_samples: int,
                          base_seed: int, grid_steps: int | None = None,
                          backend: str | None = None) -> list:
    """Paths ``(base_seed, 0..n-1)`` of the primal system; identical to calling
    :func:`simulate_primal` per index, but the policy is tabulated once."""
    x0 = _vector(system, x0, "x0")
    L = grid_steps or default_grid_steps(system.T)
    policy.bind(system)
    model = primal_model(system, policy, L)
    jt, jm, _zT, acc, pre, post, snaps = simulate_batch(
        system, model, x0, n_samples, base_seed, record=True, backend=backend)
    return _paths_from_batch(system, L, jt, jm, acc, pre, post, snaps, base_seed,
                             ("state_energy",))


def simulate_dual_paths(system: SwitchSystem, y0, policy: DualPolicy, n_samples: int,
                        base_seed: int, grid_steps: int | None = None,
                        backend: str | None = None) -> list:
    """Batch twin of :func:`simulate_dual`."""
    y0 = _vector(system, y0, "y0")
    L = grid_steps or default_grid_steps(system.T)
    policy.bind(system)
    model = dual_model(system, policy, L)
    jt, jm, _zT, acc, pre, post, snaps = simulate_batch(
        system, model, y0, n_samples, base_seed, record=True, backend=backend)
    return _paths_from_batch(system, L, jt, jm, acc, pre, post, snaps, base_seed, ("cost",))


def simulate_batch(system: SwitchSystem, model, z0, n_samples: int, base_seed: int,
                   record: bool = False, backend: str | None = None):
    """Run ``n_samples`` paths (indices ``0..n-1`` of ``base_seed``) of a tabulated model."""
    jt, jm = sample_mode_paths(system, n_samples, base_seed)
    z0 = np.broadcast_to(np.asarray(z0, float), (n_samples, model.D))
    out = _backend.run(model, np.ascontiguousarray(z0), system.gamma0_index, jt, jm,
                       system.T, record=record, backend=backend)
    _check_finite(out[0], out[1], out[4])
    return (jt, jm) + tuple(out)


def mc_cost_dual(system: SwitchSystem, y0, policy: DualPolicy, n_samples: int,
                 base_seed: int, grid_steps: int | None = None,
                 backend: str | None = None) -> MCEstimate:
    """Mean and standard error of ``∫₀ᵀ |Π_{(ker B(Γ)ᵀ)⊥} Y_t|² dt``."""
    if n_samples < MIN_MC_SAMPLES:
        raise ValueError(f"n_samples must be >= {MIN_MC_SAMPLES}")
    y0 = _vector(system, y0, "y0")
    L = grid_steps or default_grid_steps(system.T)
    policy.bind(system)
    model = dual_model(system, policy, L)
    _jt, _jm, _zT, acc, *_ = simulate_batch(system, model, y0, n_samples, base_seed,
                                            backend=backend)
    return _estimate(acc[:, 0], base_seed)


def duality_residuals(system: SwitchSystem, x0, y0, primal: PrimalPolicy,
                      dual: DualPolicy, n_samples: int, base_seed: int,
                      grid_steps: int | None = None, backend: str | None = None):
    """Per-sample ``⟨X_T, Y_T⟩ − ⟨x0, y0⟩ − ∫⟨u, B(Γ)ᵀ Y⟩`` on common mode paths."""
    x0 = _vector(system, x0, "x0")
    y0 = _vector(system, y0, "y0")
    N = system.N
    L = grid_steps or default_grid_steps(system.T)
    primal.bind(system)
    dual.bind(system)
    model = joint_model(system, primal, dual, L)
    _jt, _jm, zT, acc, *_ = simulate_batch(system, model, np.concatenate([x0, y0]),
                                           n_samples, base_seed, backend=backend)
    return np.einsum("si,si->s", zT[:, :N], zT[:, N:]) - float(x0 @ y0) - acc[:, 0]


def duality_check(system: SwitchSystem, x0, y0, primal: PrimalPolicy, dual: DualPolicy,
                  n_samples: int, base_seed: int, grid_steps: int | None = None,
                  backend: str | None = None) -> MCEstimate:
    """Estimate ``E⟨X_T, Y_T⟩ − ⟨x0, y0⟩ − E∫⟨u, B(Γ)ᵀ Y⟩dt`` (zero by duality)."""
    r = duality_residuals(system, x0, y0, primal, dual, n_samples, base_seed,
                          grid_steps, backend)
    return _estimate(r, base_seed)


def write_paths_csv(paths, fh) -> None:
    """Per-path CSV: ``sample, t, mode, x_1..x_N`` on each path's grid."""
    paths = list(paths)
    if not paths:
        return
    N = paths[0].states.shape[1]
    w = csv.writer(fh)
    w.writerow(["sample", "t", "mode"] + [f"x_{i + 1}" for i in range(N)])
    for sp in paths:
        modes = sp.modes_on_grid()
        for t, g, x in zip(sp.grid, modes, sp.states):
            w.writerow([sp.seed[1], repr(float(t)), sp.modes[g]] + [repr(float(v)) for v in x])
