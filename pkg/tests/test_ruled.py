import itertools
import json
import math

import numpy as np
import pytest

from equiaffine import exprlang, ruled
from equiaffine.errors import ArgumentError, CalibrationError


def wedge_oracle(beta, W):
    """beta ^ (d beta)^n on e_1..e_m by the full alternating sum."""
    m = len(beta)
    n = (m - 1) // 2
    total = 0.0
    for perm in itertools.permutations(range(m)):
        inv = sum(1 for i in range(m) for j in range(i + 1, m) if perm[i] > perm[j])
        term = beta[perm[0]]
        for k in range(n):
            term *= W[perm[1 + 2 * k], perm[2 + 2 * k]]
        total += (-1) ** inv * term
    return total / 2**n


@pytest.mark.parametrize("m", [3, 5, 7])
def test_top_wedge_against_permutation_sum(m):
    rng = np.random.default_rng(m)
    for _ in range(3):
        beta = rng.normal(size=m)
        A = rng.normal(size=(m, m))
        W = A - A.T
        assert ruled.top_wedge(beta, W) == pytest.approx(wedge_oracle(beta, W), rel=1e-10)


@pytest.mark.parametrize("pair,kappa", [(("sin(t)", "cos(t)"), -1.0), (("exp(-t)", "-exp(t)"), -2.0),
                                        (("cos(t)", "2*sin(t)"), 2.0)])
def test_wronskian_calibration(pair, kappa):
    imm = ruled.wronskian_pair(*pair)
    assert imm.calibration.calibrated
    assert imm.calibration.kappa == pytest.approx(kappa, abs=1e-12)


def test_lifted_circle_is_calibrated():
    imm = ruled.ahelic()
    assert imm.n == 2 and imm.calibration.calibrated
    assert imm.calibration.kappa == pytest.approx(-1.0, abs=1e-10)


def test_uncalibrated_immersion_rejected():
    imm = ruled.CentroaffineImmersion.from_expressions(["x1", "x1^2 + 1"])
    assert not imm.calibration.calibrated
    with pytest.raises(CalibrationError):
        ruled.build_ruled_field(imm)


def test_genhel_builtin_agrees_with_construction():
    rng = np.random.default_rng(0)
    rf = ruled.genhel_ruled("x1*x2")
    fld = exprlang.builtin("genhel", "x1*x2")
    for p in rf.sample(rng, 10):
        J1, J2 = rf.field.jet(p, 2), fld.jet(p, 2)
        np.testing.assert_allclose(J1.c, J2.c, atol=1e-12)


@pytest.mark.parametrize("make", [ruled.helicoid_ruled, lambda: ruled.genhel_ruled("sin(x1) + x2^3")])
def test_level_parameterization_round_trip(make):
    rf = make()
    rng = np.random.default_rng(2)
    for _ in range(20):
        r = rf.base.sample(rng, 1)[0]
        s = rng.uniform(-2, 2, rf.n)
        t = rng.uniform(-3, 3)
        p = ruled.level_parameterization(rf, t, r, s)
        assert rf.field.value(p) == pytest.approx(t, abs=1e-12)
        t2, r2, s2 = ruled.ruled_coordinates(rf, p)
        assert t2 == pytest.approx(t, abs=1e-12)
        np.testing.assert_allclose(r2, r, atol=1e-14)
        np.testing.assert_allclose(s2, s, atol=1e-10)


def test_level_parameterization_domain_check():
    rf = ruled.helicoid_ruled()
    with pytest.raises(ArgumentError):
        ruled.level_parameterization(rf, 0.0, [10.0], [0.0])
    with pytest.raises(ArgumentError):
        ruled.level_parameterization(rf, 0.0, [0.0, 1.0], [0.0])


def test_invariant_suite_on_genhel():
    rf = ruled.genhel_ruled("x1*x2")
    pts = rf.sample(np.random.default_rng(4), 10, box=1.0)
    res = ruled.ruled_invariant_suite(rf, pts)
    for key in ("kappa_eq", "normal", "S2", "ker_S", "isotropy", "dF_ruling", "U_squared"):
        assert res[key] <= 1e-8, key
    assert res["inertia_split"] and res["hessian_nullity_one"]


def test_contact_structure():
    rf = ruled.genhel_ruled()
    pts = rf.sample(np.random.default_rng(5), 5, box=1.0)
    res = ruled.contact_symplectic_check(rf, pts)
    assert res["contact"]
    assert res["wedge"] <= 1e-12 and res["reeb_beta"] <= 1e-12 and res["lagrangian"] <= 1e-12


def test_affine_sphere_dichotomy():
    flat = ruled.CentroaffineImmersion.from_expressions(["x1 + sin(x2)", "x2", "1"])
    u = np.random.default_rng(6).uniform(-1, 1, (10, 2))
    assert ruled.affine_sphere_test(flat, u)["verdict"] == "improper affine sphere"
    assert ruled.affine_sphere_test(ruled.ahelic(), u)["variation"] >= 0.1


def test_to_dict_is_json_ready():
    d = ruled.helicoid_ruled().to_dict()
    assert json.loads(json.dumps(d))["kappa"] == pytest.approx(-1.0)
    assert math.isfinite(d["kappa"])
