"""Subspace algebra over R^N.

Every subspace is carried as an orthonormal basis (``ambient_dim x dim``).
Ranks are decided with a relative singular-value cutoff: singular values
``s <= rank_tol * s_max`` count as zero.  The invariant-subspace routines
accept an operand ``scale`` that floors ``s_max``, for matrices that are
exactly zero up to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError

RANK_TOL = 1e-10
EQUALITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of R^N with an orthonormal basis stored column-wise."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise DimensionError("basis must be a 2-D array (ambient_dim x dim)")
        b = b.copy()
        b.flags.writeable = False
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(np.zeros((ambient_dim, 0)))

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(np.eye(ambient_dim))

    def projector(self) -> np.ndarray:
        return projector(self)

    def contains(self, other: "Subspace", tol: float = 1e-10) -> bool:
        """True if ``other`` is a subspace of ``self``."""
        _check_ambient(self, other)
        P = self.projector()
        Q = other.projector()
        return bool(np.linalg.norm(P @ Q - Q) <= tol)

    def equals(self, other: "Subspace", tol: float = EQUALITY_TOL) -> bool:
        return distance(self, other) < tol

    def __repr__(self):
        return f"Subspace(ambient_dim={self.ambient_dim}, dim={self.dim})"


def _check_ambient(*spaces: Subspace) -> None:
    dims = {s.ambient_dim for s in spaces}
    if len(dims) > 1:
        raise DimensionError(f"ambient dimension mismatch: {sorted(dims)}")


def _range_basis(M: np.ndarray, rank_tol: float, floor: float = 0.0) -> np.ndarray:
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[0], 0))
    r = int(np.sum(s > rank_tol * max(s[0], floor)))
    return U[:, :r]


def _family_span(family, n: int, rank_tol: float, scale: float = 0.0) -> "Subspace":
    images = []
    for i, Ci in enumerate(family):
        Ci = np.asarray(Ci, dtype=float)
        if Ci.shape != (n, n):
            raise DimensionError(f"family[{i}] has shape {Ci.shape}, expected {(n, n)}")
        images.append(Subspace(_range_basis(Ci, rank_tol, floor=scale)))
    return sum_all(images, n, rank_tol)


def orthonormalize(vectors: Sequence[Sequence[float]] | np.ndarray,
                   rank_tol: float = RANK_TOL,
                   ambient_dim: int | None = None) -> Subspace:
    """Orthonormal basis of the span of ``vectors`` (a list of row vectors).

    An empty list needs ``ambient_dim`` and yields the zero subspace.
    """
    vecs = list(vectors) if not isinstance(vectors, np.ndarray) else list(vectors)
    if not vecs:
        if ambient_dim is None:
            raise DimensionError("ambient_dim is required for an empty vector list")
        return Subspace.zero(ambient_dim)
    lengths = {len(v) for v in vecs}
    if len(lengths) != 1:
        raise DimensionError(f"vectors have different lengths: {sorted(lengths)}")
    n = lengths.pop()
    if ambient_dim is not None and n != ambient_dim:
        raise DimensionError(f"vectors live in R^{n}, expected R^{ambient_dim}")
    M = np.asarray(vecs, dtype=float).T
    return Subspace(_range_basis(M, rank_tol))


def kernel(M: np.ndarray, rank_tol: float = RANK_TOL) -> Subspace:
    """Null space of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[1]
    if M.shape[0] == 0:
        return Subspace.full(n)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return Subspace.full(n)
    r = int(np.sum(s > rank_tol * s[0]))
    return Subspace(Vt[r:].T)


def image(M: np.ndarray, rank_tol: float = RANK_TOL) -> Subspace:
    """Column space of ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return Subspace(_range_basis(M, rank_tol))


def projector(S: Subspace) -> np.ndarray:
    """Orthogonal projector onto ``S``."""
    return S.basis @ S.basis.T


def complement(S: Subspace) -> Subspace:
    """Orthogonal complement of ``S``."""
    return kernel(S.basis.T) if S.dim else Subspace.full(S.ambient_dim)


def sum_(S1: Subspace, S2: Subspace, rank_tol: float = RANK_TOL) -> Subspace:
    _check_ambient(S1, S2)
    return Subspace(_range_basis(np.hstack([S1.basis, S2.basis]), rank_tol))


def sum_all(spaces: Iterable[Subspace], ambient_dim: int,
            rank_tol: float = RANK_TOL) -> Subspace:
    blocks = [s.basis for s in spaces]
    for b in blocks:
        if b.shape[0] != ambient_dim:
            raise DimensionError("ambient dimension mismatch")
    if not blocks:
        return Subspace.zero(ambient_dim)
    return Subspace(_range_basis(np.hstack(blocks), rank_tol))


def intersect(S1: Subspace, S2: Subspace, rank_tol: float = RANK_TOL) -> Subspace:
    """``S1 ∩ S2`` as the kernel of the stacked complementary projectors."""
    _check_ambient(S1, S2)
    n = S1.ambient_dim
    eye = np.eye(n)
    stacked = np.vstack([eye - projector(S1), eye - projector(S2)])
    return _kernel_abs(stacked, rank_tol)


def _kernel_abs(M: np.ndarray, rank_tol: float) -> Subspace:
    # Projector differences have singular values in [0, sqrt(2)]; an absolute
    # cutoff keeps a zero stacked matrix from being treated as full rank.
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    cutoff = rank_tol * max(s[0] if s.size else 0.0, 1.0)
    r = int(np.sum(s > cutoff))
    return Subspace(Vt[r:].T)


def preimage(A: np.ndarray, S: Subspace, rank_tol: float = RANK_TOL,
             scale: float | None = None) -> Subspace:
    """``{x : A x ∈ S}``.

    ``scale`` is the magnitude of the operands ``A`` was assembled from; when
    given, singular values below ``rank_tol * max(||A||, scale)`` are treated
    as cancellation noise.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != S.ambient_dim:
        raise DimensionError(
            f"operator of shape {A.shape} incompatible with R^{S.ambient_dim}")
    residual = (np.eye(S.ambient_dim) - projector(S)) @ A
    if not np.any(np.abs(residual) > 0.0):
        return Subspace.full(S.ambient_dim)
    # Scale-aware cutoff: entries far below ||A|| are rounding noise.
    scale = max(np.linalg.norm(A, 2), scale or 0.0, 1e-300)
    _, s, Vt = np.linalg.svd(residual, full_matrices=True)
    r = int(np.sum(s > rank_tol * scale))
    return Subspace(Vt[r:].T)


def distance(S1: Subspace, S2: Subspace) -> float:
    """Frobenius distance between orthogonal projectors."""
    _check_ambient(S1, S2)
    return float(np.linalg.norm(projector(S1) - projector(S2)))


def largest_invariant_subspace(A: np.ndarray, family: Sequence[np.ndarray],
                               W: Subspace, rank_tol: float = RANK_TOL,
                               return_history: bool = False, scale: float | None = None):
    """Largest ``V ⊆ W`` with ``A V ⊆ V + Σ Im C_i``.

    Runs ``V_0 = W``, ``V_{j+1} = V_j ∩ A^{-1}(V_j + Σ Im C_i)`` until the
    dimension stops dropping (at most ``N`` rounds).  ``scale`` bounds the
    size of the operands behind ``A`` and ``C_i`` (see :func:`preimage`), so
    an exact zero that picked up rounding, e.g. after a change of basis,
    still counts as zero.
    """
    A = np.asarray(A, dtype=float)
    n = W.ambient_dim
    if A.shape != (n, n):
        raise DimensionError(f"A has shape {A.shape}, expected {(n, n)}")
    S = _family_span(family, n, rank_tol, scale or 0.0)

    V = W
    history = [V.dim]
    for _ in range(n + 1):
        if V.dim == 0:
            break
        target = sum_(V, S, rank_tol)
        V_next = intersect(V, preimage(A, target, rank_tol, scale), rank_tol)
        history.append(V_next.dim)
        if V_next.dim == V.dim:
            V = V_next
            break
        V = V_next
    return (V, history) if return_history else V


def invariance_defect(A: np.ndarray, family: Sequence[np.ndarray], V: Subspace,
                      rank_tol: float = RANK_TOL, scale: float | None = None) -> float:
    """``||(I - Π_{V + Σ Im C_i}) A Π_V||_F``; zero iff ``V`` is invariant."""
    n = V.ambient_dim
    S = _family_span(family, n, rank_tol, scale or 0.0)
    target = sum_(V, S, rank_tol)
    return float(np.linalg.norm((np.eye(n) - projector(target)) @ A @ projector(V)))
