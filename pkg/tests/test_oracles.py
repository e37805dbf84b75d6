import mpmath as mp
import numpy as np

from oracles import GRAMIAN_EXP34, KBAR0_LAMBDA_MIN, KBAR0_T1, kbar


def test_gramian_constant_by_quadrature():
    mp.mp.dps = 30
    ent = lambda i, j: mp.quad(lambda s: mp.e ** (2 * s) * [[1, s], [s, s * s]][i][j], [0, 1])
    G = np.array([[float(ent(i, j)) for j in range(2)] for i in range(2)])
    assert np.allclose(G, GRAMIAN_EXP34, rtol=1e-15, atol=0)


def test_kbar_constants():
    assert np.allclose(kbar(0.0), KBAR0_T1, rtol=1e-15, atol=1e-16)
    mp.mp.dps = 30
    lam = mp.eigsy(mp.matrix(KBAR0_T1.tolist()))[0]
    assert abs(float(min(lam)) - KBAR0_LAMBDA_MIN) < 1e-15


def test_kbar_terminal_is_zero():
    assert np.allclose(kbar(1.0), 0.0, atol=1e-15)
