"""Small hand-built systems shared by the tests."""
import numpy as np

from switchctrl import parse_system


def single_mode(A, B, *, lam=0.0, C=None, M=1, T=1.0):
    """One-mode system (the lone mode never jumps unless ``lam`` > 0 with a self-free Q)."""
    A = np.asarray(A, float)
    N = A.shape[0]
    doc = {"N": N, "d": np.asarray(B, float).shape[1], "modes": ["a"],
           "lambda": {"a": lam}, "Q": [[0.0]], "A": {"a": A.tolist()},
           "B": np.asarray(B, float).tolist(), "M": M, "T": T, "gamma0": "a"}
    if C is not None:
        doc["C"] = {"a->a": np.asarray(C, float).tolist()}
    return parse_system(doc)


def two_mode(A0, A1, B, *, lam=1.0, C01=None, C10=None, M=2, T=1.0, gamma0="a"):
    """Two modes that alternate at rate ``lam``."""
    N = np.asarray(A0).shape[0]
    doc = {"N": N, "d": np.asarray(B, float).shape[1], "modes": ["a", "b"],
           "lambda": {"a": lam, "b": lam}, "Q": [[0.0, 1.0], [1.0, 0.0]],
           "A": {"a": np.asarray(A0, float).tolist(), "b": np.asarray(A1, float).tolist()},
           "B": np.asarray(B, float).tolist(), "M": M, "T": T, "gamma0": gamma0}
    C = {}
    if C01 is not None:
        C["a->b"] = np.asarray(C01, float).tolist()
    if C10 is not None:
        C["b->a"] = np.asarray(C10, float).tolist()
    if C:
        doc["C"] = C
    return parse_system(doc)
