"""Controls for the primal system and the dual forward system.

Every policy here is affine in the state: at time ``t``, level ``n`` and
mode ``γ`` a primal policy returns ``u = G x + g`` and a dual policy returns,
for each target ``θ``, ``v(θ) = G_θ y⁻ + g_θ``.  The simulator tabulates
``(G, g)`` on its time grid through :meth:`affine`, which is vectorised in
``t``.  ``left`` marks times where the left limit is wanted (interval ends),
which only matters for policies that are discontinuous in time.

Calling a policy directly, ``policy(t, trajectory, state)``, evaluates the
same law for one point of a realised mode trajectory.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from ..errors import SingularGramianError
from ..model import ModeTrajectory, SwitchSystem
from ..riccati import RiccatiSolution
from ..subspace import RANK_TOL, image, kernel

GRAMIAN_COND_MAX = 1e12


def matrix_exp(Mx, t: float = 1.0) -> np.ndarray:
    """``e^{Mx t}`` (scaling and squaring with a Padé approximant)."""
    Mx = np.asarray(Mx, dtype=float)
    if Mx.ndim != 2 or Mx.shape[0] != Mx.shape[1]:
        raise ValueError(f"matrix_exp needs a square matrix, got shape {Mx.shape}")
    return scipy.linalg.expm(Mx * float(t))


def _times(t) -> np.ndarray:
    return np.atleast_1d(np.asarray(t, dtype=float))


class PrimalPolicy:
    """``u = G(t, n, γ) x + g(t, n, γ)``."""

    time_invariant = False

    def affine(self, system: SwitchSystem, t, level: int, mode: int, left=None):
        raise NotImplementedError

    def __call__(self, t: float, trajectory: ModeTrajectory, x) -> np.ndarray:
        raise_if_unbound(self)
        G, g = self.affine(self._system, _times(t), trajectory.level, trajectory.mode)
        return G[0] @ np.asarray(x, float) + g[0]

    def bind(self, system: SwitchSystem) -> "PrimalPolicy":
        self._system = system
        return self


class DualPolicy:
    """``v(θ) = G_θ(t, n, γ) y⁻ + g_θ(t, n, γ)``."""

    time_invariant = False

    def affine(self, system: SwitchSystem, t, level: int, mode: int, theta: int,
               left=None):
        raise NotImplementedError

    def __call__(self, t: float, trajectory: ModeTrajectory, y) -> np.ndarray:
        """Array of shape ``(p, N)``: the jump size for every target mode."""
        raise_if_unbound(self)
        s = self._system
        y = np.asarray(y, float)
        out = np.zeros((s.p, s.N))
        for th in range(s.p):
            G, g = self.affine(s, _times(t), trajectory.level, trajectory.mode, th)
            out[th] = G[0] @ y + g[0]
        return out

    def bind(self, system: SwitchSystem) -> "DualPolicy":
        self._system = system
        return self


def raise_if_unbound(policy) -> None:
    if getattr(policy, "_system", None) is None:
        raise RuntimeError(f"{type(policy).__name__} must be bound to a system "
                           "(policy.bind(system)) before direct evaluation")


# ------------------------------------------------------------------ primal


class ZeroPrimal(PrimalPolicy):
    time_invariant = True

    def affine(self, system, t, level, mode, left=None):
        n = len(_times(t))
        return np.zeros((n, system.d, system.N)), np.zeros((n, system.d))


class LinearPrimalFeedback(PrimalPolicy):
    """Mode-dependent gains ``u = G[γ] x + g[γ]``."""

    time_invariant = True

    def __init__(self, gains, offsets=None):
        self.gains = np.asarray(gains, dtype=float)
        if self.gains.ndim != 3:
            raise ValueError("gains must have shape (p, d, N)")
        p, d, _ = self.gains.shape
        self.offsets = (np.zeros((p, d)) if offsets is None
                        else np.asarray(offsets, dtype=float))

    def affine(self, system, t, level, mode, left=None):
        n = len(_times(t))
        return (np.broadcast_to(self.gains[mode], (n,) + self.gains.shape[1:]),
                np.broadcast_to(self.offsets[mode], (n,) + self.offsets.shape[1:]))


class GramianControl(PrimalPolicy):
    """Open-loop deterministic null control applied until the first jump.

    ``u(t) = −Bᵀ e^{A_effᵀ (T−t)} G_T⁻¹ e^{A_eff T} x0`` steers
    ``ẋ = A_eff x + B u`` from ``x0`` to ``0`` at ``T``.  After the first jump
    the control is switched off.
    """

    def __init__(self, A_eff, B, T, x0, G, cond):
        self.A_eff = np.asarray(A_eff, float)
        self.B = np.asarray(B, float)
        self.T = float(T)
        self.x0 = np.asarray(x0, float)
        self.G = G
        self.cond = cond
        self._eta = np.linalg.solve(G, matrix_exp(self.A_eff, self.T) @ self.x0)
        self._cache = (None, None)

    def control(self, t) -> np.ndarray:
        t = _times(t)
        key = t.tobytes()
        if self._cache[0] == key:
            return self._cache[1].copy()
        Es = scipy.linalg.expm(self.A_eff.T[None] * (self.T - t)[:, None, None])
        u = -np.einsum("ij,tjk,k->ti", self.B.T, Es, self._eta)
        u[t > self.T] = 0.0
        self._cache = (key, u)
        return u.copy()

    def affine(self, system, t, level, mode, left=None):
        t = _times(t)
        G = np.zeros((len(t), self.B.shape[1], self.B.shape[0]))
        g = self.control(t) if level == 0 else np.zeros((len(t), self.B.shape[1]))
        return G, g


def gramian_control(A_eff, B, T: float, x0, quad_steps: int = 2000) -> GramianControl:
    """Controllability Gramian by composite Simpson and the induced open-loop control.

    Raises :class:`SingularGramianError` when the Gramian's condition number
    exceeds ``1e12``.
    """
    A_eff = np.asarray(A_eff, float)
    B = np.atleast_2d(np.asarray(B, float))
    if quad_steps < 2:
        raise ValueError("quad_steps must be >= 2")
    panels = quad_steps + (quad_steps % 2)
    s = np.linspace(0.0, T, panels + 1)
    E = scipy.linalg.expm(A_eff[None] * (T - s)[:, None, None])
    EB = E @ B
    integrand = EB @ np.swapaxes(EB, 1, 2)
    wts = np.ones(panels + 1)
    wts[1:-1:2] = 4.0
    wts[2:-1:2] = 2.0
    G = (T / panels / 3.0) * np.einsum("t,tij->ij", wts, integrand)
    G = 0.5 * (G + G.T)
    cond = float(np.linalg.cond(G))
    if not math.isfinite(cond) or cond > GRAMIAN_COND_MAX:
        raise SingularGramianError(
            f"controllability Gramian is singular (condition number {cond:.3g})")
    return GramianControl(A_eff, B, T, x0, G, cond)


def pre_jump_drift(system: SwitchSystem, gamma=None) -> np.ndarray:
    """``A(γ) − λ(γ) Σ_θ Q(γ,θ) C(γ,θ)``: the primal drift before the first jump."""
    g = system.gamma0_index if gamma is None else system.index(gamma)
    return system.A[g] - system.lam[g] * np.einsum("t,tij->ij", system.Q[g], system.C[g])


# -------------------------------------------------------------------- dual


class ZeroDual(DualPolicy):
    time_invariant = True

    def affine(self, system, t, level, mode, theta, left=None):
        n = len(_times(t))
        return np.zeros((n, system.N, system.N)), np.zeros((n, system.N))


class LinearDualFeedback(DualPolicy):
    """``v(θ) = G[γ, θ] y⁻ + g[γ, θ]`` with constant tables."""

    time_invariant = True

    def __init__(self, gains, offsets=None):
        self.gains = np.asarray(gains, dtype=float)
        if self.gains.ndim != 4:
            raise ValueError("gains must have shape (p, p, N, N)")
        p, _, N, _ = self.gains.shape
        self.offsets = (np.zeros((p, p, N)) if offsets is None
                        else np.asarray(offsets, dtype=float))

    def affine(self, system, t, level, mode, theta, left=None):
        n = len(_times(t))
        G = self.gains[mode, theta]
        g = self.offsets[mode, theta]
        return np.broadcast_to(G, (n,) + G.shape), np.broadcast_to(g, (n,) + g.shape)


def constant_dual(system: SwitchSystem, fn) -> LinearDualFeedback:
    """State-independent dual policy ``v(θ) = fn(γ_label, θ_label)``."""
    p, N = system.p, system.N
    offsets = np.zeros((p, p, N))
    for g, gl in enumerate(system.modes):
        for th, tl in enumerate(system.modes):
            offsets[g, th] = np.asarray(fn(gl, tl), float)
    return LinearDualFeedback(np.zeros((p, p, N, N)), offsets)


def stationary_dual_policy(system: SwitchSystem) -> LinearDualFeedback:
    """``v(θ) = (0, …, 0, (−1)^γ)`` for integer-labelled modes.

    On exp-3-4 this keeps ``Y_t = (0, Γ_t)`` exactly: the drift term
    cancels and each jump moves the second coordinate by ``±1``.
    """
    def fn(gl, _tl):
        v = np.zeros(system.N)
        v[-1] = (-1.0) ** int(gl)
        return v
    return constant_dual(system, fn)


def random_linear_policies(system: SwitchSystem, rng: np.random.Generator,
                           scale: float = 0.5):
    """A random primal feedback and a random dual feedback (for duality checks)."""
    p, N, d = system.p, system.N, system.d
    primal = LinearPrimalFeedback(scale * rng.standard_normal((p, d, N)),
                                  scale * rng.standard_normal((p, d)))
    dual = LinearDualFeedback(scale * rng.standard_normal((p, p, N, N)),
                              scale * rng.standard_normal((p, p, N)))
    return primal, dual


class RiccatiFeedback(DualPolicy):
    """``v(θ) = (εI + K⁺)⁻¹ [(C(γ,θ) + I) K − K⁺] y⁻`` with ``K = K[n, γ](t)``,
    ``K⁺ = K[n+1, θ](t)`` taken from the (interpolated) Riccati solution."""

    def __init__(self, solution: RiccatiSolution):
        self.solution = solution

    def affine(self, system, t, level, mode, theta, left=None):
        t = _times(t)
        N = system.N
        if level >= system.M:
            return np.zeros((len(t), N, N)), np.zeros((len(t), N))
        Kt = self.solution.at(t)
        K = Kt[:, level, mode]
        Kp = Kt[:, level + 1, theta]
        eps = self.solution.params.epsilon
        f = (system.C[mode, theta] + np.eye(N)) @ K - Kp
        G = np.linalg.solve(eps * np.eye(N) + Kp, f)
        return G, np.zeros((len(t), N))


def riccati_feedback_policy(solution: RiccatiSolution) -> RiccatiFeedback:
    return RiccatiFeedback(solution)


class BurstPolicy(DualPolicy):
    """Short burst that nulls the dual state before the first jump.

    During phase ``k`` (``t ∈ [kε, (k+1)ε)``, ``k < m``) at level 0 the policy
    is ``v(θ) = −P y⁻ + w_k`` where ``P`` projects onto ``Im B(γ0)`` and
    ``w_k ∈ ker B(γ0)ᵀ``.  A jump therefore lands in ``ker Bᵀ``; the ``w_k``
    are solved in closed form so that ``Y(mε) = 0`` when no jump occurs.
    Outside the burst the policy is zero.
    """

    def __init__(self, system: SwitchSystem, y0, eps_burst: float,
                 rank_tol: float = RANK_TOL):
        if not eps_burst > 0:
            raise ValueError("eps_burst must be positive")
        g0 = system.gamma0_index
        N = system.N
        B = system.B[g0]
        self.eps = float(eps_burst)
        self.P = image(B, rank_tol).projector() if B.size else np.zeros((N, N))
        Kb = kernel(B.T, rank_tol).basis
        r = Kb.shape[1]
        if r == 0:
            self.m, self.w = 1, np.zeros((1, N))
            return
        E = system.lam[g0] * np.einsum(
            "t,tij->ij", system.Q[g0], np.eye(N) + np.swapaxes(system.C[g0], 1, 2))
        Abar = -system.A[g0].T + E @ self.P
        aug = np.zeros((2 * N, 2 * N))
        aug[:N, :N] = Abar
        aug[:N, N:] = np.eye(N)
        ex = scipy.linalg.expm(aug * self.eps)
        Phi, Gam = ex[:N, :N], ex[:N, N:]
        m = int(math.ceil(N / r))
        y0 = np.asarray(y0, float)
        blocks = []
        for k in range(m):
            blocks.append(np.linalg.matrix_power(Phi, m - 1 - k) @ Gam @ (-E @ Kb))
        Mbig = np.hstack(blocks)
        rhs = -np.linalg.matrix_power(Phi, m) @ y0
        alpha, *_ = np.linalg.lstsq(Mbig, rhs, rcond=None)
        resid = float(np.linalg.norm(Mbig @ alpha - rhs))
        if resid > 1e-9 * (1.0 + float(np.linalg.norm(y0))):
            raise ValueError(
                f"burst phases cannot null y0 (residual {resid:.3g}); the pre-jump "
                "dual dynamics are not controllable through ker Bᵀ")
        self.m = m
        self.w = (Kb @ alpha.reshape(m, r).T).T          # (m, N)

    @property
    def duration(self) -> float:
        return self.m * self.eps

    def _phase(self, t, left):
        x = t / self.eps
        k = np.floor(x + 1e-9).astype(int)
        if left is not None:
            kl = np.ceil(x - 1e-9).astype(int) - 1
            k = np.where(left, kl, k)
        return k

    def affine(self, system, t, level, mode, theta, left=None):
        t = _times(t)
        N = system.N
        G = np.zeros((len(t), N, N))
        g = np.zeros((len(t), N))
        if level != 0:
            return G, g
        k = self._phase(t, None if left is None else np.broadcast_to(left, t.shape))
        on = (k >= 0) & (k < self.m)
        G[on] = -self.P
        g[on] = self.w[k[on]]
        return G, g


def burst_policy(system: SwitchSystem, y0, eps_burst: float) -> BurstPolicy:
    return BurstPolicy(system, y0, eps_burst)
