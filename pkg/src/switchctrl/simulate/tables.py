"""Tabulated affine switched models and their exact RK4 step maps.

The simulator integrates one generic object: a state ``z ∈ R^D`` with

    z' = F(n, γ, t) z + f(n, γ, t)              between jumps,
    c_k' = zᵀ W_k(n, γ, t) z + w_k(n, γ, t)ᵀ z   running integrals,
    z ← J(n, γ, θ, τ) z + b(n, γ, θ, τ)        at a jump γ → θ.

Coefficients are tabulated per grid interval at its start, midpoint and end
(``Lt = 1`` when nothing depends on time).  Because the right side is affine,
a full classical RK4 step is itself an affine map ``z ↦ R z + r`` and the
RK4 quadrature of the running integrals is a quadratic form
``zᵀ S z + sᵀ z + σ``; both are precomputed once per interval.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model import SwitchSystem
from ..subspace import image
from .policies import DualPolicy, PrimalPolicy


@dataclass
class AffineModel:
    h: float
    L: int
    Lt: int
    F: np.ndarray      # (lv, p, Lt, 3, D, D)
    f: np.ndarray      # (lv, p, Lt, 3, D)
    W: np.ndarray      # (lv, p, Lt, 3, A, D, D)
    w: np.ndarray      # (lv, p, Lt, 3, A, D)
    J: np.ndarray      # (lv, p, p, Lt, 3, D, D)
    b: np.ndarray      # (lv, p, p, Lt, 3, D)
    R: np.ndarray = None
    r: np.ndarray = None
    S: np.ndarray = None
    s: np.ndarray = None
    sig: np.ndarray = None

    @property
    def D(self) -> int:
        return self.F.shape[-1]

    @property
    def n_acc(self) -> int:
        return self.W.shape[4]

    def finalize(self) -> "AffineModel":
        for name in ("F", "f", "W", "w", "J", "b"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=float))
        self.W = 0.5 * (self.W + np.swapaxes(self.W, -1, -2))
        self.R, self.r, self.S, self.s, self.sig = step_maps(
            self.F, self.f, self.W, self.w, self.h)
        return self


def step_maps(F, f, W, w, h):
    """Affine RK4 step ``(R, r)`` and quadratic quadrature ``(S, s, σ)``.

    Stage ``i`` of RK4 evaluates at ``z_i = P_i z + p_i``; the four stages are
    propagated symbolically, so the maps are exact for the tabulated
    coefficients.
    """
    D = F.shape[-1]
    eye = np.eye(D)
    F0, F1, F2 = F[..., 0, :, :], F[..., 1, :, :], F[..., 2, :, :]
    f0, f1, f2 = f[..., 0, :], f[..., 1, :], f[..., 2, :]
    mv = lambda M, v: np.einsum("...ij,...j->...i", M, v)

    P1 = np.broadcast_to(eye, F0.shape)
    p1 = np.zeros_like(f0)
    K1, k1 = F0, f0
    P2, p2 = eye + 0.5 * h * K1, 0.5 * h * k1
    K2, k2 = F1 @ P2, mv(F1, p2) + f1
    P3, p3 = eye + 0.5 * h * K2, 0.5 * h * k2
    K3, k3 = F1 @ P3, mv(F1, p3) + f1
    P4, p4 = eye + h * K3, h * k3
    K4, k4 = F2 @ P4, mv(F2, p4) + f2
    R = eye + (h / 6.0) * (K1 + 2 * K2 + 2 * K3 + K4)
    r = (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    stages = ((P1, p1, 0, 1.0), (P2, p2, 1, 2.0), (P3, p3, 1, 2.0), (P4, p4, 2, 1.0))
    A = W.shape[-3]
    S = np.zeros(W.shape[:-4] + (A, D, D))
    s = np.zeros(W.shape[:-4] + (A, D))
    sig = np.zeros(W.shape[:-4] + (A,))
    for P, pv, node, c in stages:
        Wn = W[..., node, :, :, :]              # (..., A, D, D)
        wn = w[..., node, :, :]                 # (..., A, D)
        Pe = P[..., None, :, :]
        pe = pv[..., None, :]
        WP = Wn @ Pe
        S += c * (np.swapaxes(Pe, -1, -2) @ WP)
        Wp = np.einsum("...ij,...j->...i", Wn, pe)
        s += c * (2.0 * np.einsum("...ji,...j->...i", Pe, Wp)
                  + np.einsum("...ji,...j->...i", Pe, wn))
        sig += c * (np.einsum("...i,...i->...", pe, Wp) + np.einsum("...i,...i->...", wn, pe))
    scale = h / 6.0
    return R, r, scale * S, scale * s, scale * sig


# ---------------------------------------------------------------- sampling


def node_times(h: float, L: int, Lt: int):
    """Times of the three nodes per interval and the matching ``left`` flags."""
    if Lt == 1:
        return np.zeros(3), np.array([False, False, True])
    j = np.arange(L)[:, None]
    t = (j + np.array([0.0, 0.5, 1.0])[None, :]) * h
    left = np.broadcast_to(np.array([False, False, True]), t.shape)
    return t.ravel(), left.ravel()


def _primal_tab(system, policy, level, mode, t, left, Lt):
    G, g = policy.affine(system, t, level, mode, left=left)
    return (np.asarray(G, float).reshape(Lt, 3, system.d, system.N),
            np.asarray(g, float).reshape(Lt, 3, system.d))


def _dual_tab(system, policy, level, mode, theta, t, left, Lt):
    G, g = policy.affine(system, t, level, mode, theta, left=left)
    return (np.asarray(G, float).reshape(Lt, 3, system.N, system.N),
            np.asarray(g, float).reshape(Lt, 3, system.N))


def _lt(*policies) -> int:
    return 1 if all(p.time_invariant for p in policies) else None


def cost_projectors(system: SwitchSystem) -> np.ndarray:
    """``Π_{(ker B(γ)ᵀ)⊥} = Π_{Im B(γ)}`` for every mode."""
    return np.stack([image(system.B[g]).projector() for g in range(system.p)])


def _empty(system, Lt, D, A):
    lv, p = system.M + 1, system.p
    return dict(F=np.zeros((lv, p, Lt, 3, D, D)), f=np.zeros((lv, p, Lt, 3, D)),
                W=np.zeros((lv, p, Lt, 3, A, D, D)), w=np.zeros((lv, p, Lt, 3, A, D)),
                J=np.zeros((lv, p, p, Lt, 3, D, D)), b=np.zeros((lv, p, p, Lt, 3, D)))


def primal_model(system: SwitchSystem, policy: PrimalPolicy, L: int) -> AffineModel:
    """``ẋ = A x + B u − gate λ Σ Q C x``; jumps ``x ← (I + C) x``."""
    h = system.T / L
    Lt = _lt(policy) or L
    t, left = node_times(h, L, Lt)
    N = system.N
    tab = _empty(system, Lt, N, 1)
    for n in range(system.M + 1):
        for g in range(system.p):
            G, gu = _primal_tab(system, policy, n, g, t, left, Lt)
            drift = system.A[g].copy()
            if n < system.M:
                drift -= system.lam[g] * np.einsum("t,tij->ij", system.Q[g], system.C[g])
            tab["F"][n, g] = drift + system.B[g] @ G
            tab["f"][n, g] = np.einsum("ij,...j->...i", system.B[g], gu)
            tab["W"][n, g, :, :, 0] = np.eye(N)     # running ∫|x|², diagnostics only
            if n < system.M:
                for th in range(system.p):
                    tab["J"][n, g, th] = np.eye(N) + system.C[g, th]
    return AffineModel(h, L, Lt, **tab).finalize()


def _dual_blocks(system, policy, n, g, t, left, Lt):
    """Drift correction and jump tables of the dual at level ``n``, mode ``g``."""
    N = system.N
    Fc = np.zeros((Lt, 3, N, N))
    fc = np.zeros((Lt, 3, N))
    Js = np.zeros((system.p, Lt, 3, N, N))
    bs = np.zeros((system.p, Lt, 3, N))
    if n >= system.M:
        return Fc, fc, Js, bs
    for th in range(system.p):
        G, gv = _dual_tab(system, policy, n, g, th, t, left, Lt)
        Js[th] = np.eye(N) + G
        bs[th] = gv
        rate = system.lam[g] * system.Q[g, th]
        if rate != 0.0:
            M = np.eye(N) + system.C[g, th].T
            Fc -= rate * (M @ G)
            fc -= rate * np.einsum("ij,...j->...i", M, gv)
    return Fc, fc, Js, bs


def dual_model(system: SwitchSystem, policy: DualPolicy, L: int) -> AffineModel:
    """``ẏ = −Aᵀ y − gate λ Σ Q (I + Cᵀ) v(θ)``; jumps ``y ← y + v(θ)``.

    Accumulator 0 is the projected cost ``|Π_{Im B(γ)} y|²``.
    """
    h = system.T / L
    Lt = _lt(policy) or L
    t, left = node_times(h, L, Lt)
    proj = cost_projectors(system)
    tab = _empty(system, Lt, system.N, 1)
    for n in range(system.M + 1):
        for g in range(system.p):
            Fc, fc, Js, bs = _dual_blocks(system, policy, n, g, t, left, Lt)
            tab["F"][n, g] = -system.A[g].T + Fc
            tab["f"][n, g] = fc
            tab["W"][n, g, :, :, 0] = proj[g]
            tab["J"][n, g] = Js
            tab["b"][n, g] = bs
    return AffineModel(h, L, Lt, **tab).finalize()


def joint_model(system: SwitchSystem, primal: PrimalPolicy, dual: DualPolicy,
                L: int) -> AffineModel:
    """``z = (x, y)`` driven by the same mode path.

    Accumulator 0 is ``∫⟨u, B(Γ)ᵀ Y⟩``; accumulator 1 the projected dual cost.
    """
    N = system.N
    h = system.T / L
    Lt = _lt(primal, dual) or L
    t, left = node_times(h, L, Lt)
    tab = _empty(system, Lt, 2 * N, 2)
    proj = cost_projectors(system)
    for n in range(system.M + 1):
        for g in range(system.p):
            G, gu = _primal_tab(system, primal, n, g, t, left, Lt)
            drift = system.A[g].copy()
            if n < system.M:
                drift -= system.lam[g] * np.einsum("t,tij->ij", system.Q[g], system.C[g])
            Bg = system.B[g]
            BG = Bg @ G                                       # (Lt, 3, N, N)
            tab["F"][n, g, :, :, :N, :N] = drift + BG
            tab["f"][n, g, :, :, :N] = np.einsum("ij,...j->...i", Bg, gu)
            Fc, fc, Js, bs = _dual_blocks(system, dual, n, g, t, left, Lt)
            tab["F"][n, g, :, :, N:, N:] = -system.A[g].T + Fc
            tab["f"][n, g, :, :, N:] = fc
            # ⟨G x + g, Bᵀ y⟩ = xᵀ (B G)ᵀ y + (B g)ᵀ y
            tab["W"][n, g, :, :, 0, N:, :N] = 0.5 * BG
            tab["W"][n, g, :, :, 0, :N, N:] = 0.5 * np.swapaxes(BG, -1, -2)
            tab["w"][n, g, :, :, 0, N:] = np.einsum("ij,...j->...i", Bg, gu)
            tab["W"][n, g, :, :, 1, N:, N:] = proj[g]
            if n < system.M:
                for th in range(system.p):
                    tab["J"][n, g, th, :, :, :N, :N] = np.eye(N) + system.C[g, th]
                tab["J"][n, g, :, :, :, N:, N:] = Js
                tab["b"][n, g, :, :, :, N:] = bs
    return AffineModel(h, L, Lt, **tab).finalize()
