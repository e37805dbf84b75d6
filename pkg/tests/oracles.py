"""Reference values computed independently of the package and frozen here.

Each constant lists how it was obtained; ``test_oracles.py`` recomputes
them with mpmath so a typo cannot slip in unnoticed.
"""
import numpy as np

# exp-3-4 pre-jump pair A_eff = [[1,0],[1,1]], B = e1, T = 1.
# G = ∫_0^1 e^{2s} [[1, s], [s, s²]] ds, antiderivatives in closed form.
GRAMIAN_EXP34 = np.array([[3.1945280494653251, 2.0972640247326626],
                          [2.0972640247326626, 1.5972640247326626]])

# Lower bound K̄ on [0, T] for exp-3-4, mode 0 (level-one input removed):
# a = 1 − e^{t−T}, b = (T+1−t) e^{t−T} − 1, c = 2 − (1 + (T+1−t)²) e^{t−T}.
KBAR0_T1 = np.array([[0.63212055882855768, -0.26424111765711536],
                     [-0.26424111765711536, 0.16060279414278839]])
KBAR0_LAMBDA_MIN = 0.042235118791608517


def kbar(t, T=1.0):
    """K̄(t) as an array of shape ``t.shape + (2, 2)``."""
    t = np.asarray(t, dtype=float)
    e = np.exp(t - T)
    a = 1.0 - e
    b = (T + 1.0 - t) * e - 1.0
    c = 2.0 - (1.0 + (T + 1.0 - t) ** 2) * e
    return np.stack([np.stack([a, b], -1), np.stack([b, c], -1)], -2)


def expm_shift_plus_identity(t):
    """e^{t [[1,0],[1,1]]} = e^t [[1,0],[t,1]] (identity commutes with the nilpotent part)."""
    return np.exp(t) * np.array([[1.0, 0.0], [t, 1.0]])
