"""Piecewise-linear Markov switch systems.

A :class:`SwitchSystem` bundles the mode process (rates ``lam``, transition
matrix ``Q``, jump cap ``M``, horizon ``T``, initial mode) with the per-mode
coefficients ``A``, ``B`` and the per-transition jump matrices ``C``.
Mode labels are strings; every array is indexed by mode position.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError

ROW_SUM_TOL = 1e-12
TRANSITION_TOL = 1e-14


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SwitchSystem:
    modes: tuple
    lam: np.ndarray          # (p,)
    Q: np.ndarray            # (p, p)
    A: np.ndarray            # (p, N, N)
    B: np.ndarray            # (p, N, d)
    C: np.ndarray            # (p, p, N, N); C[g, th] acts on jumps g -> th
    M: int
    T: float
    gamma0: str

    def __post_init__(self):
        for name in ("lam", "Q", "A", "B", "C"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "modes", tuple(str(m) for m in self.modes))
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "gamma0", str(self.gamma0))
        _validate(self)

    @property
    def N(self) -> int:
        return self.A.shape[1]

    @property
    def d(self) -> int:
        return self.B.shape[2]

    @property
    def p(self) -> int:
        return len(self.modes)

    @property
    def gamma0_index(self) -> int:
        return self.index(self.gamma0)

    def index(self, mode) -> int:
        """Position of a mode given by label (or already an index)."""
        if isinstance(mode, (int, np.integer)) and not isinstance(mode, bool):
            if 0 <= mode < self.p:
                return int(mode)
            raise KeyError(f"unknown mode index {mode}")
        try:
            return self.modes.index(str(mode))
        except ValueError:
            raise KeyError(f"unknown mode {mode!r}; modes are {list(self.modes)}") from None

    @property
    def b_constant(self) -> bool:
        return bool(np.all(self.B == self.B[0]))

    def transitions(self, gamma: int, tol: float = TRANSITION_TOL):
        """Target indices ``th`` with ``Q[gamma, th] > tol``."""
        return [th for th in range(self.p) if self.Q[gamma, th] > tol]

    def with_overrides(self, *, T=None, M=None, gamma0=None, lam=None) -> "SwitchSystem":
        kw = {}
        if T is not None:
            kw["T"] = float(T)
        if M is not None:
            kw["M"] = int(M)
        if gamma0 is not None:
            kw["gamma0"] = self.modes[self.index(gamma0)]
        if lam is not None:
            kw["lam"] = np.broadcast_to(np.asarray(lam, float), (self.p,)).copy()
        return replace(self, **kw)

    def __eq__(self, other):
        if not isinstance(other, SwitchSystem):
            return NotImplemented
        return (self.modes == other.modes and self.M == other.M
                and self.T == other.T and self.gamma0 == other.gamma0
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in ("lam", "Q", "A", "B", "C")))

    __hash__ = None

    def fingerprint(self) -> str:
        blob = json.dumps(to_document(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def summary(self) -> dict:
        return {"N": self.N, "d": self.d, "p": self.p, "modes": list(self.modes),
                "M": self.M, "T": self.T, "gamma0": self.gamma0,
                "lambda": {m: float(v) for m, v in zip(self.modes, self.lam)}}


def _validate(s: SwitchSystem) -> None:
    p = len(s.modes)
    if p < 1:
        raise ConfigError("modes", "at least one mode is required")
    if len(set(s.modes)) != p:
        raise ConfigError("modes", "mode labels must be unique")
    if s.A.ndim != 3 or s.A.shape[0] != p or s.A.shape[1] != s.A.shape[2]:
        raise ConfigError("A", f"expected {p} square matrices, got shape {s.A.shape}")
    N = s.A.shape[1]
    if N < 1:
        raise ConfigError("N", "state dimension must be positive")
    if s.B.ndim != 3 or s.B.shape[:2] != (p, N) or s.B.shape[2] < 1:
        raise ConfigError("B", f"expected {p} matrices of shape ({N}, d), got {s.B.shape}")
    if s.C.shape != (p, p, N, N):
        raise ConfigError("C", f"expected shape {(p, p, N, N)}, got {s.C.shape}")
    if s.lam.shape != (p,):
        raise ConfigError("lambda", f"expected {p} rates, got shape {s.lam.shape}")
    if s.Q.shape != (p, p):
        raise ConfigError("Q", f"expected a {p}x{p} matrix, got shape {s.Q.shape}")
    for name in ("lam", "Q", "A", "B", "C"):
        if not np.all(np.isfinite(getattr(s, name))):
            raise ConfigError(name if name != "lam" else "lambda", "entries must be finite")
    for g, m in enumerate(s.modes):
        if s.lam[g] < 0:
            raise ConfigError(f"lambda.{m}", f"jump rate must be >= 0, got {s.lam[g]}")
    for g, m in enumerate(s.modes):
        if s.Q[g, g] != 0.0:
            raise ConfigError(f"Q[{g}][{g}]",
                              f"diagonal must vanish (Q(γ,{{γ}}) = 0), got {s.Q[g, g]}")
        row = s.Q[g]
        if np.any(row < 0):
            raise ConfigError(f"Q[{g}]", "transition probabilities must be >= 0")
        total = row.sum()
        # a mode that never jumps may carry an all-zero row
        if s.lam[g] == 0.0 and total == 0.0:
            continue
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise ConfigError(f"Q[{g}]",
                              f"row {g + 1} (mode {m!r}) sums to {float(total):.12g}, expected 1")
    if s.M < 1:
        raise ConfigError("M", f"jump cap must be >= 1, got {s.M}")
    if not (s.T > 0 and np.isfinite(s.T)):
        raise ConfigError("T", f"horizon must be a positive number, got {s.T}")
    if s.gamma0 not in s.modes:
        raise ConfigError("gamma0", f"unknown mode {s.gamma0!r}")


# ---------------------------------------------------------------- documents

_KEYS = {"N", "d", "modes", "lambda", "Q", "A", "B", "C", "M", "T", "gamma0"}
_REQUIRED = _KEYS - {"C"}


def _matrix(value, path, shape) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(path, "expected a numeric array of arrays") from None
    if arr.shape != shape:
        raise ConfigError(path, f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(path, "entries must be finite")
    return arr


def _number(value, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def parse_system(document: str | bytes | Mapping[str, Any]) -> SwitchSystem:
    """Build a validated :class:`SwitchSystem` from a JSON document."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError("<document>", f"invalid JSON: {exc}") from None
    if not isinstance(document, Mapping):
        raise ConfigError("<document>", "top level must be an object")
    unknown = set(document) - _KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    missing = _REQUIRED - set(document)
    if missing:
        raise ConfigError(sorted(missing)[0], "missing required key")

    N, d = document["N"], document["d"]
    for key, v in (("N", N), ("d", d)):
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError(key, f"expected a positive integer, got {v!r}")
    modes = document["modes"]
    if (not isinstance(modes, list) or not modes
            or not all(isinstance(m, str) for m in modes)):
        raise ConfigError("modes", "expected a non-empty array of strings")
    if len(set(modes)) != len(modes):
        raise ConfigError("modes", "mode labels must be unique")
    p = len(modes)

    lam_doc = document["lambda"]
    if not isinstance(lam_doc, Mapping):
        raise ConfigError("lambda", "expected a map mode -> rate")
    for m in lam_doc:
        if m not in modes:
            raise ConfigError(f"lambda.{m}", "unknown mode")
    lam = np.zeros(p)
    for g, m in enumerate(modes):
        if m not in lam_doc:
            raise ConfigError(f"lambda.{m}", "missing rate (rates are never defaulted)")
        lam[g] = _number(lam_doc[m], f"lambda.{m}")
        if lam[g] < 0:
            raise ConfigError(f"lambda.{m}", f"jump rate must be >= 0, got {lam[g]}")

    Q = _matrix(document["Q"], "Q", (p, p))

    A_doc = document["A"]
    if not isinstance(A_doc, Mapping):
        raise ConfigError("A", "expected a map mode -> matrix")
    for m in A_doc:
        if m not in modes:
            raise ConfigError(f"A.{m}", "unknown mode")
    A = np.zeros((p, N, N))
    for g, m in enumerate(modes):
        if m not in A_doc:
            raise ConfigError(f"A.{m}", "missing matrix")
        A[g] = _matrix(A_doc[m], f"A.{m}", (N, N))

    B_doc = document["B"]
    B = np.zeros((p, N, d))
    if isinstance(B_doc, Mapping):
        for m in B_doc:
            if m not in modes:
                raise ConfigError(f"B.{m}", "unknown mode")
        for g, m in enumerate(modes):
            if m not in B_doc:
                raise ConfigError(f"B.{m}", "missing matrix")
            B[g] = _matrix(B_doc[m], f"B.{m}", (N, d))
    else:
        B[:] = _matrix(B_doc, "B", (N, d))

    C = np.zeros((p, p, N, N))
    C_doc = document.get("C", {}) or {}
    if not isinstance(C_doc, Mapping):
        raise ConfigError("C", "expected a map \"γ->θ\" -> matrix")
    for key, value in C_doc.items():
        parts = key.split("->")
        if len(parts) != 2 or parts[0] not in modes or parts[1] not in modes:
            raise ConfigError(f"C.{key}", "key must read \"<mode>-><mode>\" with known modes")
        C[modes.index(parts[0]), modes.index(parts[1])] = _matrix(value, f"C.{key}", (N, N))

    M = document["M"]
    if isinstance(M, bool) or not isinstance(M, int):
        raise ConfigError("M", f"expected an integer, got {M!r}")
    T = _number(document["T"], "T")
    gamma0 = document["gamma0"]
    if not isinstance(gamma0, str):
        raise ConfigError("gamma0", "expected a mode label")
    return SwitchSystem(modes=tuple(modes), lam=lam, Q=Q, A=A, B=B, C=C,
                        M=M, T=T, gamma0=gamma0)


def to_document(system: SwitchSystem) -> dict:
    """Inverse of :func:`parse_system`; zero ``C`` blocks are left out."""
    modes = list(system.modes)
    doc = {
        "N": system.N,
        "d": system.d,
        "modes": modes,
        "lambda": {m: float(system.lam[g]) for g, m in enumerate(modes)},
        "Q": system.Q.tolist(),
        "A": {m: system.A[g].tolist() for g, m in enumerate(modes)},
        "M": system.M,
        "T": system.T,
        "gamma0": system.gamma0,
    }
    if system.b_constant:
        doc["B"] = system.B[0].tolist()
    else:
        doc["B"] = {m: system.B[g].tolist() for g, m in enumerate(modes)}
    C = {}
    for g, a in enumerate(modes):
        for th, b in enumerate(modes):
            if np.any(system.C[g, th] != 0.0):
                C[f"{a}->{b}"] = system.C[g, th].tolist()
    if C:
        doc["C"] = C
    return doc


# ------------------------------------------------------------ mode algebra

def cal_A_star(system: SwitchSystem, gamma) -> np.ndarray:
    """Effective dual drift ``A(γ)ᵀ − λ(γ) Σ_θ Q(γ,θ) (C(γ,θ)ᵀ + I)``."""
    g = system.index(gamma)
    eye = np.eye(system.N)
    jump = sum(system.Q[g, th] * (system.C[g, th].T + eye) for th in range(system.p))
    return system.A[g].T - system.lam[g] * jump


def jump_intensity(system: SwitchSystem, level: int, gamma, t: float) -> np.ndarray:
    """Per-target jump rates ``λ(γ) Q(γ, ·)``; zero once the cap or horizon is passed."""
    g = system.index(gamma)
    if t < 0:
        raise ValueError("t must be non-negative")
    if level <= system.M - 1 and t <= system.T:
        return system.lam[g] * system.Q[g]
    return np.zeros(system.p)


@dataclass(frozen=True)
class ModeTrajectory:
    """Realised marks ``((0, γ0), (t1, γ1), ...)`` with mode indices."""

    marks: tuple
    cap: int

    @classmethod
    def start(cls, system: SwitchSystem, gamma0=None) -> "ModeTrajectory":
        g0 = system.gamma0_index if gamma0 is None else system.index(gamma0)
        return cls(((0.0, g0),), system.M)

    @property
    def level(self) -> int:
        return len(self.marks) - 1

    @property
    def last_time(self) -> float:
        return self.marks[-1][0]

    @property
    def mode(self) -> int:
        return self.marks[-1][1]

    def concat(self, t: float, gamma: int) -> "ModeTrajectory":
        if not t > self.last_time:
            raise ValueError(f"jump time {t} does not follow last mark time {self.last_time}")
        if self.level >= self.cap:
            raise ValueError(f"jump cap M={self.cap} reached")
        return ModeTrajectory(self.marks + ((float(t), int(gamma)),), self.cap)

    def mode_at(self, t: float) -> int:
        g = self.marks[0][1]
        for s, th in self.marks[1:]:
            if s <= t:
                g = th
        return g

    def level_at(self, t: float) -> int:
        return sum(1 for s, _ in self.marks[1:] if s <= t)


def concat(e: ModeTrajectory, t: float, gamma: int) -> ModeTrajectory:
    return e.concat(t, gamma)


def require_constant_B(system: SwitchSystem) -> np.ndarray:
    if not system.b_constant:
        raise ConfigError("B", "the invariance criteria need a mode-independent B")
    return system.B[0]
