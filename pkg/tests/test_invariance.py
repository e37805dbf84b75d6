import numpy as np
import pytest
from scipy.stats import ortho_group

from switchctrl import load_fixture, parse_system, to_document
from switchctrl.errors import ConfigError
from switchctrl.invariance import (approx_ctrl_subspaces, approx_ctrl_sufficient,
                                   approx_null_verdict, invariance_report, v_ladder)
from switchctrl.model import cal_A_star
from switchctrl.subspace import (Subspace, distance, invariance_defect, kernel,
                                 orthonormalize, projector)

from helpers import single_mode, two_mode

E2 = orthonormalize([[0.0, 1.0]])
ZERO = Subspace.zero(2)


def same(S, T):
    return distance(S, T) <= 1e-8


class TestLadders:
    def test_exp33(self, exp33):
        lad = v_ladder(exp33)
        for n in range(exp33.M + 1):
            assert same(lad[n, 1], E2) and same(lad[n, 2], E2)
        for n in range(exp33.M):
            assert same(lad[n, 0], ZERO)
        assert same(lad[exp33.M, 0], E2)

    def test_exp34(self, exp34):
        lad = v_ladder(exp34)
        for n in range(exp34.M):
            assert same(lad[n, 0], ZERO)
            assert same(lad[n, 1], E2)

    def test_top_level_is_kernel(self, exp34):
        lad = v_ladder(exp34)
        for g in range(exp34.p):
            assert same(lad[exp34.M, g], kernel(exp34.B[0].T))

    def test_every_entry_inside_kernel(self, exp33):
        K = kernel(exp33.B[0].T)
        for row in v_ladder(exp33.with_overrides(M=4)).entries:
            for S in row:
                assert K.contains(S, 1e-10)

    def test_stabilisation_when_extending_cap(self, exp33):
        short, long_ = v_ladder(exp33), v_ladder(exp33.with_overrides(M=5))
        # the ladder only depends on the distance to the top level
        for k in range(exp33.M + 1):
            for g in range(exp33.p):
                assert same(short[exp33.M - k, g], long_[5 - k, g])

    def test_dims_and_dict(self, exp34):
        lad = v_ladder(exp34)
        assert lad.dims() == [[0, 1], [0, 1], [1, 1]]
        d = lad.as_dict()
        assert d["dims"]["0"] == {"0": 0, "1": 1}
        assert np.allclose(np.abs(d["bases"]["0"]["1"]), [[0.0, 1.0]])

    def test_mode_dependent_B_rejected(self):
        doc = to_document(load_fixture("exp-3-4"))
        doc["B"] = {"0": [[1.0], [0.0]], "1": [[0.0], [1.0]]}
        with pytest.raises(ConfigError):
            v_ladder(parse_system(doc))


class TestVerdicts:
    @pytest.mark.parametrize("g0, expected", [("e1", True), ("e2", False), ("e3", False)])
    def test_exp33(self, exp33, g0, expected):
        assert approx_null_verdict(exp33.with_overrides(gamma0=g0)) is expected

    @pytest.mark.parametrize("g0, expected", [("0", True), ("1", False)])
    def test_exp34(self, exp34, g0, expected):
        assert approx_null_verdict(exp34.with_overrides(gamma0=g0)) is expected

    def test_invertible_B(self):
        s = two_mode(np.eye(2), [[0, 1], [-1, 0]], np.eye(2))
        assert all(approx_null_verdict(s.with_overrides(gamma0=g)) for g in s.modes)
        assert approx_ctrl_sufficient(s) == "holds"

    def test_deterministic_kalman(self):
        # with no jumps the ladder reduces to the Kalman rank test
        ctrl = single_mode([[0, 1], [0, 0]], [[0], [1]])
        unctrl = single_mode([[1, 0], [0, 2]], [[1], [0]])
        assert approx_null_verdict(ctrl)
        assert not approx_null_verdict(unctrl)

    def test_tiny_drift_keeps_its_rank(self):
        # the operand floor must not swallow a genuinely small A
        assert approx_null_verdict(single_mode([[0, 1e-12], [0, 0]], [[0], [1]]))


class TestSufficientCondition:
    def test_exp34_inconclusive(self, exp34):
        assert approx_ctrl_sufficient(exp34) == "inconclusive"
        spaces = approx_ctrl_subspaces(exp34)
        assert spaces[0].dim == 0 and same(spaces[1], E2)

    def test_exp34_final_inconclusive(self):
        s = load_fixture("exp-3-4-final")
        assert approx_ctrl_sufficient(s) == "inconclusive"
        assert same(approx_ctrl_subspaces(s)[1], E2)

    def test_report(self, exp34):
        rep = invariance_report(exp34)
        assert rep["approx_null_controllable"] is True
        assert rep["approx_ctrl_sufficient"] == "inconclusive"
        assert rep["approx_ctrl_witness_dims"] == {"0": 0, "1": 1}
        assert rep["ladder"]["dims"]["1"] == {"0": 0, "1": 1}


def _relabel(system, perm):
    doc = to_document(system)
    modes = list(system.modes)
    new = [modes[i] for i in perm]
    doc["modes"] = new
    doc["Q"] = system.Q[np.ix_(perm, perm)].tolist()
    return parse_system(doc)


def _rotate(system, U):
    doc = to_document(system)
    doc["A"] = {m: (U @ system.A[g] @ U.T).tolist() for g, m in enumerate(system.modes)}
    doc["B"] = (U @ system.B[0]).tolist()
    doc["C"] = {k: (U @ np.array(v) @ U.T).tolist() for k, v in doc.get("C", {}).items()}
    return parse_system(doc)


@pytest.mark.parametrize("name", ["exp-3-3", "exp-3-4", "exp-3-4-final"])
def test_relabel_invariance(name):
    s = load_fixture(name)
    rng = np.random.default_rng(7)
    for _ in range(5):
        perm = list(rng.permutation(s.p))
        r = _relabel(s, perm)
        for g in s.modes:
            assert approx_null_verdict(s.with_overrides(gamma0=g)) == \
                approx_null_verdict(r.with_overrides(gamma0=g))


@pytest.mark.parametrize("name", ["exp-3-3", "exp-3-4"])
def test_orthogonal_invariance(name):
    s = load_fixture(name)
    for seed in range(10):
        U = ortho_group.rvs(2, random_state=seed)
        r = _rotate(s, U)
        for g in s.modes:
            assert approx_null_verdict(s.with_overrides(gamma0=g)) == \
                approx_null_verdict(r.with_overrides(gamma0=g))
        # the ladder itself rotates with the state
        ls, lr = v_ladder(s), v_ladder(r)
        for n in range(s.M + 1):
            for g in range(s.p):
                rotated = Subspace(U @ ls[n, g].basis) if ls[n, g].dim else ls[n, g]
                assert same(rotated, lr[n, g])


@pytest.mark.acceptance(10, part="invariance_fixed_point")
def test_random_systems_fixed_point():
    rng = np.random.default_rng(11)
    for _ in range(50):
        N = int(rng.integers(2, 4))
        A0, A1 = rng.normal(size=(2, N, N)) * (rng.random((2, N, N)) < 0.5)
        B = np.eye(N)[:, :1]
        C01 = rng.normal(size=(N, N)) * (rng.random((N, N)) < 0.4)
        s = two_mode(A0, A1, B, C01=C01, M=3)
        lad = v_ladder(s)
        for n in range(s.M):
            for g in range(s.p):
                th = 1 - g
                fam = [(s.C[g, th].T + np.eye(N)) @ projector(lad[n + 1, th])]
                assert invariance_defect(cal_A_star(s, g), fam, lad[n, g]) <= 1e-8
