"""Level/mode reduction of the backward Riccati equation with jumps.

With time-homogeneous coefficients the solution after ``n`` jumps depends on
the mark history only through ``(n, current mode)``, so the unknown is a
family ``K[n, γ](t)`` of symmetric ``N x N`` matrices on ``[0, T]``.  Level
``n < M`` is driven by level ``n + 1`` at the same instant, so the whole
family is integrated together, backwards from ``K = 0`` at ``t = T``::

    dK/dt = K Aᵀ + A K − ℬ
            + λ Σ_θ Q(γ,θ) [ fᵀ (εI + K⁺)⁻¹ f − (K⁺ − K) ],
    f = (C(γ,θ) + I) K − K⁺,   K⁺ = K[n+1, θ](t).

At the top level ``n = M`` no jump can occur any more; ``"gramian"`` keeps
the drift ``K Aᵀ + A K − ℬ`` there, ``"zero"`` freezes ``K[M] ≡ 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import BlowUpError, NumericalError, PSDViolation
from .model import SwitchSystem

PSD_ERROR_TOL = 1e-6
LEVEL_M_MODES = ("gramian", "zero")


@dataclass(frozen=True)
class RiccatiParams:
    epsilon: float
    cost: np.ndarray                      # (p, N, N), symmetric PSD
    grid_steps: int = 2000
    level_M_mode: str = "gramian"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.grid_steps < 100:
            raise ValueError(f"grid_steps must be >= 100, got {self.grid_steps}")
        if self.level_M_mode not in LEVEL_M_MODES:
            raise ValueError(f"level_M_mode must be one of {LEVEL_M_MODES}")
        cost = np.array(self.cost, dtype=float)
        if cost.ndim != 3 or cost.shape[1] != cost.shape[2]:
            raise ValueError(f"cost must have shape (p, N, N), got {cost.shape}")
        if not np.allclose(cost, np.swapaxes(cost, 1, 2), atol=1e-10):
            raise ValueError("cost matrices must be symmetric")
        if np.linalg.eigvalsh(cost).min() < -1e-10:
            raise ValueError("cost matrices must be positive semi-definite")
        cost.flags.writeable = False
        object.__setattr__(self, "cost", cost)

    @classmethod
    def control_cost(cls, system: SwitchSystem, epsilon: float, **kw) -> "RiccatiParams":
        """``ℬ(γ) = B(γ) B(γ)ᵀ``."""
        return cls(epsilon=epsilon, cost=system.B @ np.swapaxes(system.B, 1, 2), **kw)


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    system: SwitchSystem
    params: RiccatiParams
    grid: np.ndarray          # (L+1,)
    K: np.ndarray             # (L+1, M+1, p, N, N)
    dK: np.ndarray            # time derivative at the grid nodes
    zero_next: frozenset = field(default_factory=frozenset)

    @property
    def h(self) -> float:
        return self.grid[1] - self.grid[0]

    def node(self, n: int, gamma, j: int) -> np.ndarray:
        return self.K[j, n, self.system.index(gamma)]

    def at(self, t: float | np.ndarray) -> np.ndarray:
        """Cubic Hermite interpolation of the whole family at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        L = len(self.grid) - 1
        h = self.h
        j = np.clip(np.floor(t / h).astype(int), 0, L - 1)
        s = (t - self.grid[j]) / h
        s = s.reshape(s.shape + (1,) * (self.K.ndim - 1))
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return (h00 * self.K[j] + h10 * h * self.dK[j]
                + h01 * self.K[j + 1] + h11 * h * self.dK[j + 1])

    def H(self, n: int, gamma, theta, t: float) -> np.ndarray:
        """Jump part ``K[n+1, θ](t) − K[n, γ](t)``."""
        Kt = self.at(t)
        return Kt[n + 1, self.system.index(theta)] - Kt[n, self.system.index(gamma)]

    def to_rows(self, every: int = 1):
        """Rows ``(t, level, mode, i, j, K_ij)`` for CSV export."""
        modes = self.system.modes
        N = self.system.N
        for jt in range(0, len(self.grid), every):
            t = float(self.grid[jt])
            for n in range(self.K.shape[1]):
                for g, m in enumerate(modes):
                    for i in range(N):
                        for k in range(N):
                            yield t, n, m, i, k, float(self.K[jt, n, g, i, k])


# --------------------------------------------------------------- right side

def _sym(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def level_rhs(system: SwitchSystem, params: RiccatiParams, n: int, gamma,
              K_here: np.ndarray, K_next: Mapping) -> np.ndarray:
    """Right-hand side of the equation for block ``(n, γ)``.

    ``K_next`` maps target modes (labels or indices) to ``K[n+1, θ]``; missing
    targets count as zero.
    """
    g = system.index(gamma)
    A = system.A[g]
    K = np.asarray(K_here, dtype=float)
    eye = np.eye(system.N)
    if n >= system.M:
        if params.level_M_mode == "zero":
            return np.zeros_like(K)
        return _sym(K @ A.T + A @ K - params.cost[g])
    out = K @ A.T + A @ K - params.cost[g]
    nxt = {system.index(k): np.asarray(v, float) for k, v in K_next.items()}
    for th in system.transitions(g):
        Kx = nxt.get(th, np.zeros_like(K))
        f = (system.C[g, th] + eye) @ K - Kx
        r = params.epsilon * eye + Kx
        try:
            gf = np.linalg.solve(r, f)
        except np.linalg.LinAlgError:
            raise NumericalError(
                f"εI + K[{n + 1}, {system.modes[th]}] is singular") from None
        out = out + system.lam[g] * system.Q[g, th] * (f.T @ gf - (Kx - K))
    return _sym(out)


class _BatchRHS:
    """Vectorised right-hand side over every ``(n, γ)`` block at once."""

    def __init__(self, system: SwitchSystem, params: RiccatiParams,
                 zero_next: Iterable = ()):
        self.system = system
        self.params = params
        M, p, N = system.M, system.p, system.N
        eye = np.eye(N)
        pairs = [(g, th) for g in range(p) for th in system.transitions(g)]
        self.src = np.array([g for g, _ in pairs], dtype=int)
        self.dst = np.array([th for _, th in pairs], dtype=int)
        self.weight = np.array([system.lam[g] * system.Q[g, th] for g, th in pairs])
        self.CI = np.array([system.C[g, th] + eye for g, th in pairs]).reshape(-1, N, N)
        self.epsI = params.epsilon * eye
        mask = np.ones((M, len(pairs), 1, 1))
        for (n, g) in zero_next:
            for k, src in enumerate(self.src):
                if src == g and n < M:
                    mask[n, k] = 0.0
        self.mask = mask
        self.A = system.A
        self.At = np.swapaxes(system.A, 1, 2)
        self.cost = params.cost
        self.top_zero = params.level_M_mode == "zero"

    def __call__(self, K: np.ndarray) -> np.ndarray:
        M = self.system.M
        out = K @ self.At + self.A @ K - self.cost
        if self.top_zero:
            out[M] = 0.0
        if len(self.src):
            Kn = K[:M][:, self.src]                 # (M, P, N, N)
            Kx = K[1:][:, self.dst] * self.mask     # next level, target mode
            f = self.CI @ Kn - Kx
            try:
                gf = np.linalg.solve(self.epsI + Kx, f)
            except np.linalg.LinAlgError:
                raise NumericalError("εI + K[n+1, θ] became singular") from None
            term = np.swapaxes(f, -1, -2) @ gf - (Kx - Kn)
            term *= self.weight[None, :, None, None]
            jump = np.zeros_like(out[:M])
            np.add.at(jump, (slice(None), self.src), term)
            out[:M] += jump
        return _sym(out)


def solve(system: SwitchSystem, params: RiccatiParams,
          zero_next: Iterable = ()) -> RiccatiSolution:
    """Integrate all levels and modes backwards from ``K(T) = 0``.

    Classical fixed-step RK4 on the grid ``t_j = j T / L``; every stage is
    symmetrised.  ``zero_next`` lists ``(n, mode)`` equations whose next-level
    input is replaced by zero (a hook for closed-form comparisons).
    """
    zn = frozenset((int(n), system.index(g)) for n, g in zero_next)
    rhs = _BatchRHS(system, params, zn)
    L = params.grid_steps
    M, p, N = system.M, system.p, system.N
    grid = np.linspace(0.0, system.T, L + 1)
    h = system.T / L
    K = np.zeros((L + 1, M + 1, p, N, N))
    dK = np.zeros_like(K)
    cur = np.zeros((M + 1, p, N, N))
    for j in range(L, 0, -1):
        k1 = rhs(cur)
        dK[j] = k1
        k2 = rhs(_sym(cur - 0.5 * h * k1))
        k3 = rhs(_sym(cur - 0.5 * h * k2))
        k4 = rhs(_sym(cur - h * k3))
        cur = _sym(cur - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        if not np.all(np.isfinite(cur)):
            raise BlowUpError(f"Riccati solution became non-finite at t={grid[j - 1]:.6g}")
        _check_psd(system, cur, grid[j - 1])
        K[j - 1] = cur
    dK[0] = rhs(cur)
    return RiccatiSolution(system, params, grid, K, dK, zn)


def _check_psd(system: SwitchSystem, K: np.ndarray, t: float) -> None:
    eig = np.linalg.eigvalsh(K)                     # (M+1, p, N)
    lo = eig[..., 0]
    if lo.min() < -PSD_ERROR_TOL:
        n, g = np.unravel_index(np.argmin(lo), lo.shape)
        raise PSDViolation(int(n), system.modes[g], float(t), float(lo[n, g]))


def K0(solution: RiccatiSolution, gamma0=None) -> np.ndarray:
    """``K[0, γ0](0)``."""
    system = solution.system
    g = system.gamma0_index if gamma0 is None else system.index(gamma0)
    return solution.K[0, 0, g].copy()


# ------------------------------------------------- canonical quadratic form

@dataclass(frozen=True)
class CanonicalCoeffs:
    """Coefficients of the single-block quadratic Riccati form.

    ``a``, ``Pi``, ``b``, ``r``, ``nu`` are the coefficients as written in the
    reduction.  ``rhs_shifted`` assembles ``p a + aᵀ p − Π + p Σ b r⁻¹ bᵀ ν p``
    at ``p = εI + K`` and ``residual_shifted`` compares it with
    :func:`level_rhs`.  ``rhs_matched``/``residual_matched`` use ``p = K`` and
    ``Π`` weighted by ``λ(γ)`` (``Pi_matched``), which reproduces
    :func:`level_rhs` exactly.
    """

    a: np.ndarray
    Pi: np.ndarray
    b: dict
    r: dict
    nu: dict
    rhs_shifted: np.ndarray
    residual_shifted: float
    Pi_matched: np.ndarray
    rhs_matched: np.ndarray
    residual_matched: float


def _quadratic_form(p, a, Pi, b, r, nu):
    quad = sum(nu[th] * b[th] @ np.linalg.solve(r[th], b[th].T) for th in b) \
        if b else np.zeros_like(p)
    return p @ a + a.T @ p - Pi + p @ quad @ p


def canonical_coeffs(system: SwitchSystem, params: RiccatiParams, n: int, gamma,
                     K_next: Mapping, K_here: np.ndarray | None = None) -> CanonicalCoeffs:
    g = system.index(gamma)
    N = system.N
    eye = np.eye(N)
    eps = params.epsilon
    lam = system.lam[g]
    nxt = {system.index(k): np.asarray(v, float) for k, v in K_next.items()}
    targets = system.transitions(g)
    b, r, nu = {}, {}, {}
    a_jump = 0.5 * eye * system.Q[g].sum()
    Pi = params.cost[g].copy()
    Pi_matched = params.cost[g].copy()
    for th in targets:
        Kx = nxt.get(th, np.zeros((N, N)))
        q = system.Q[g, th]
        label = system.modes[th]
        b[label] = system.C[g, th].T + eye
        r[label] = eps * eye + Kx
        nu[label] = lam * q
        rinv = np.linalg.inv(r[label])
        a_jump = a_jump + q * system.C[g, th].T - eps * q * b[label] @ rinv
        Pi = Pi + eps * q * rinv @ Kx
        Pi_matched = Pi_matched + lam * eps * q * rinv @ Kx
    a = system.A[g].T - lam * a_jump

    K = np.zeros((N, N)) if K_here is None else np.asarray(K_here, float)
    reference = level_rhs(system, params, n, g, K, nxt)
    rhs_shifted = _quadratic_form(eps * eye + K, a, Pi, b, r, nu)
    rhs_matched = _quadratic_form(K, a, Pi_matched, b, r, nu)
    return CanonicalCoeffs(
        a=a, Pi=Pi, b=b, r=r, nu=nu,
        rhs_shifted=rhs_shifted,
        residual_shifted=float(np.linalg.norm(rhs_shifted - reference)),
        Pi_matched=Pi_matched,
        rhs_matched=rhs_matched,
        residual_matched=float(np.linalg.norm(rhs_matched - reference)),
    )
