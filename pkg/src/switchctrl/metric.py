"""Exact null-controllability through the ε → 0 limit of the Riccati family.

For a decreasing schedule of ε values the Riccati family is solved with cost
``B Bᵀ``; ``K0(ε) = K[0, γ0](0)`` decreases to ``k0`` and the system is
exactly null-controllable iff ``k0`` is positive definite.  The metric is
``p(y) = sqrt(<k0 y, y>)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import SwitchSystem
from .riccati import K0, RiccatiParams, solve

DEFAULT_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
DEFAULT_STAGNATION = 1e-2
DECAY_PER_DECADE = 0.7          # λ_min must lose at least 30% per ε-decade
MONOTONE_TOL = 1e-7
TAIL = 3


@dataclass(frozen=True)
class EpsilonSchedule:
    values: tuple = DEFAULT_SCHEDULE

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        if len(v) < 3:
            raise ValueError("an ε schedule needs at least 3 values")
        if any(x <= 0 for x in v):
            raise ValueError("ε values must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("ε values must be strictly decreasing")
        if v[-1] > 1e-5:
            raise ValueError("the last ε must be <= 1e-5")
        object.__setattr__(self, "values", v)

    @classmethod
    def parse(cls, text: str) -> "EpsilonSchedule":
        return cls(tuple(float(x) for x in text.split(",") if x.strip()))


@dataclass
class K0Diagnostics:
    epsilons: list
    K0s: list                      # one N x N matrix per ε
    k0: np.ndarray
    eigen: list                    # ascending eigenvalues per ε
    deltas: list                   # ||K0(ε_i) − K0(ε_{i+1})||_2
    monotone: bool
    level_M_mode: str = "gramian"
    grid_steps: int = 2000
    verdict: str = "inconclusive"
    thresholds: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "epsilons": list(self.epsilons),
            "eigenvalues": [list(map(float, e)) for e in self.eigen],
            "k0": self.k0.tolist(),
            "K0": [K.tolist() for K in self.K0s],
            "deltas": [float(x) for x in self.deltas],
            "monotone": self.monotone,
            "level_M_mode": self.level_M_mode,
            "grid_steps": self.grid_steps,
            "verdict": self.verdict,
            "thresholds": self.thresholds,
        }


def _assemble(epsilons, mats, level_M_mode="gramian", grid_steps=2000) -> K0Diagnostics:
    mats = [0.5 * (np.asarray(K, float) + np.asarray(K, float).T) for K in mats]
    eigen = [np.sort(np.linalg.eigvalsh(K)) for K in mats]
    deltas = [float(np.linalg.norm(a - b, 2)) for a, b in zip(mats, mats[1:])]
    monotone = all(np.linalg.eigvalsh(a - b).min() >= -MONOTONE_TOL
                   for a, b in zip(mats, mats[1:]))
    return K0Diagnostics(epsilons=list(map(float, epsilons)), K0s=mats, k0=mats[-1],
                         eigen=eigen, deltas=deltas, monotone=monotone,
                         level_M_mode=level_M_mode, grid_steps=grid_steps)


def diagnostics_from_matrices(epsilons, mats) -> K0Diagnostics:
    """Build diagnostics from precomputed ``K0(ε)`` matrices and attach a verdict."""
    diag = _assemble(epsilons, mats)
    verdict(diag)
    return diag


def k0_estimate(system: SwitchSystem, schedule: EpsilonSchedule | None = None,
                grid_steps: int = 2000, level_M_mode: str = "gramian",
                delta_pd: float | None = None,
                stagnation: float = DEFAULT_STAGNATION) -> K0Diagnostics:
    schedule = schedule or EpsilonSchedule()
    mats = []
    for eps in schedule.values:
        params = RiccatiParams.control_cost(system, eps, grid_steps=grid_steps,
                                            level_M_mode=level_M_mode)
        mats.append(K0(solve(system, params)))
    diag = _assemble(schedule.values, mats, level_M_mode, grid_steps)
    verdict(diag, delta_pd, stagnation)
    return diag


def metric(diag: K0Diagnostics, y) -> float:
    """``sqrt(max(0, yᵀ k0 y))``."""
    y = np.asarray(y, dtype=float)
    if y.shape != (diag.k0.shape[0],):
        raise ValueError(f"y must have shape ({diag.k0.shape[0]},), got {y.shape}")
    return math.sqrt(max(0.0, float(y @ diag.k0 @ y)))


def _decaying(epsilons, lams, floor) -> bool:
    tail = list(zip(epsilons, lams))[-TAIL:]
    for (e1, l1), (e2, l2) in zip(tail, tail[1:]):
        if l2 <= floor:
            continue
        decades = math.log10(e1 / e2)
        if l2 > l1 * DECAY_PER_DECADE ** decades:
            return False
    return True


def verdict(diag: K0Diagnostics, delta_pd: float | None = None,
            stagnation: float = DEFAULT_STAGNATION) -> str:
    """Classify the ε-trajectory as ``exact``, ``not_exact`` or ``inconclusive``.

    ``exact``: ``λ_min(k0) > delta_pd`` and the last ε-step moved ``K0`` by at
    most ``stagnation (1 + ||k0||)``.  ``not_exact``: ``λ_min`` shrinks by at
    least 30% per decade of ε over the tail of the schedule (or is already
    zero).  A non-monotone trajectory is always ``inconclusive``.
    """
    k0 = diag.k0
    N = k0.shape[0]
    norm = float(np.linalg.norm(k0, 2))
    if delta_pd is None:
        delta_pd = 1e-4 * (1.0 + float(np.trace(k0)) / N)
    lams = [float(e[0]) for e in diag.eigen]
    floor = 1e-12 * (1.0 + norm)
    last_delta = diag.deltas[-1] if diag.deltas else float("inf")
    if not diag.monotone:
        result = "inconclusive"
    elif lams[-1] > delta_pd and last_delta <= stagnation * (1.0 + norm):
        result = "exact"
    elif _decaying(diag.epsilons, lams, floor):
        result = "not_exact"
    else:
        result = "inconclusive"
    diag.verdict = result
    diag.thresholds = {"delta_pd": delta_pd, "stagnation": stagnation,
                       "decay_per_decade": DECAY_PER_DECADE, "tail": TAIL,
                       "monotone_tol": MONOTONE_TOL}
    return result
