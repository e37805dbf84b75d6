"""Algebraic controllability tests built on invariant subspaces of ``ker Bᵀ``.

The ladder ``V[n][γ]`` starts from ``V[M][γ] = ker Bᵀ`` and descends: level
``n`` is the largest subspace of ``ker Bᵀ`` invariant for the effective dual
drift of mode ``γ`` modulo the images of ``(C(γ,θ)ᵀ + I) Π_{V[n+1][θ]}`` over
the reachable targets ``θ``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SwitchSystem, cal_A_star, require_constant_B
from .subspace import (RANK_TOL, Subspace, kernel, largest_invariant_subspace,
                       projector)


@dataclass(frozen=True)
class VLadder:
    """``entries[n][g]`` is the subspace at level ``n`` for mode index ``g``."""

    entries: tuple
    modes: tuple

    @property
    def M(self) -> int:
        return len(self.entries) - 1

    def __getitem__(self, key):
        n, g = key
        return self.entries[n][g]

    def dims(self) -> list:
        return [[s.dim for s in row] for row in self.entries]

    def as_dict(self) -> dict:
        return {
            "dims": {str(n): {m: s.dim for m, s in zip(self.modes, row)}
                     for n, row in enumerate(self.entries)},
            "bases": {str(n): {m: s.basis.T.tolist() for m, s in zip(self.modes, row)}
                      for n, row in enumerate(self.entries)},
        }


def _family(system: SwitchSystem, g: int, next_row) -> list:
    eye = np.eye(system.N)
    return [(system.C[g, th].T + eye) @ projector(next_row[th])
            for th in system.transitions(g)]


def operand_scale(system: SwitchSystem, g: int) -> float:
    """Size of the matrices the mode-``g`` drift and family are built from."""
    A = np.linalg.norm(system.A[g], 2)
    jumps = [np.linalg.norm(system.C[g, th], 2) + 1.0 for th in system.transitions(g)]
    if not jumps:
        return float(A)
    return float(A + (system.lam[g] + 1.0) * max(jumps))


def v_ladder(system: SwitchSystem, rank_tol: float = RANK_TOL) -> VLadder:
    B = require_constant_B(system)
    kerBt = kernel(B.T, rank_tol)
    rows = [None] * (system.M + 1)
    rows[system.M] = tuple(kerBt for _ in range(system.p))
    drifts = [cal_A_star(system, g) for g in range(system.p)]
    for n in range(system.M - 1, -1, -1):
        rows[n] = tuple(
            largest_invariant_subspace(drifts[g], _family(system, g, rows[n + 1]),
                                       kerBt, rank_tol, scale=operand_scale(system, g))
            for g in range(system.p))
    return VLadder(tuple(rows), system.modes)


def approx_null_verdict(system: SwitchSystem, ladder: VLadder | None = None) -> bool:
    """Approximate null-controllability from the initial mode."""
    ladder = v_ladder(system) if ladder is None else ladder
    return ladder[0, system.gamma0_index].dim == 0


def approx_ctrl_subspaces(system: SwitchSystem, rank_tol: float = RANK_TOL) -> list:
    """Per-mode largest invariant subspace with every target projected on ``ker Bᵀ``."""
    B = require_constant_B(system)
    kerBt = kernel(B.T, rank_tol)
    row = [kerBt] * system.p
    return [largest_invariant_subspace(cal_A_star(system, g), _family(system, g, row),
                                       kerBt, rank_tol, scale=operand_scale(system, g))
            for g in range(system.p)]


def approx_ctrl_sufficient(system: SwitchSystem) -> str:
    """``"holds"`` when the sufficient condition for approximate controllability
    is met, ``"inconclusive"`` otherwise (the condition is not necessary)."""
    spaces = approx_ctrl_subspaces(system)
    return "holds" if all(s.dim == 0 for s in spaces) else "inconclusive"


def invariance_report(system: SwitchSystem) -> dict:
    ladder = v_ladder(system)
    suff = approx_ctrl_subspaces(system)
    return {
        "ladder": ladder.as_dict(),
        "approx_null_controllable": approx_null_verdict(system, ladder),
        "approx_ctrl_sufficient": "holds" if all(s.dim == 0 for s in suff) else "inconclusive",
        "approx_ctrl_witness_dims": {m: s.dim for m, s in zip(system.modes, suff)},
        "rank_tol": RANK_TOL,
    }
