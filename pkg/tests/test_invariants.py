import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from equiaffine import exprlang, forms, invariants
from equiaffine.errors import CriticalPointError, DegenerateError

SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "invariant_report.schema.json").read_text())


def helicoid():
    return exprlang.builtin("helicoid3")


@pytest.mark.parametrize("p", [[0.0, 1.0, 1.0], [0.7, -1.2, 2.5], [-2.9, 0.3, -0.4]])
def test_helicoid_values(p):
    rep = invariants.analyze(helicoid(), p)
    u = p[0]
    assert rep.Ucal == pytest.approx(-1.0, abs=1e-12)
    assert rep.H == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(rep.nm, [0.0, -math.sin(u), -math.cos(u)], atol=1e-12)
    assert rep.kappa_eq == pytest.approx(0.0, abs=1e-12)
    assert rep.flags == {"regular_point": True, "nondegenerate": True, "Ucal_sign": -1, "jet_order": 4}


def test_symdet_idempotent_curvature():
    fld = exprlang.builtin("symdet", 2)
    rep = invariants.analyze(fld, exprlang.symdet_idempotent(2, 0))
    assert rep.kappa_eq == pytest.approx(2 ** -0.75, abs=1e-12)
    assert rep.kappa_amc == pytest.approx(rep.kappa_eq, abs=1e-12)


@pytest.mark.parametrize("n,p,H", [(2, 0, 1.0), (2, 1, 1.0), (3, 0, -2.0), (3, 1, -2.0)])
def test_symdet_hessian_determinant_at_idempotents(n, p, H):
    fld = exprlang.builtin("symdet", n)
    assert invariants.hessian_determinant(fld, exprlang.symdet_idempotent(n, p)) == pytest.approx(H, abs=1e-12)


def test_degenerate_report_keeps_flags():
    fld = exprlang.from_expression("x1^2*x3 + x1*x2*x4 + x2^2*x5", exprlang.xnames(5))
    rep = invariants.analyze(fld, [1, 1, 1, 1, 1])
    assert not rep.nondegenerate and rep.flags["regular_point"]
    assert rep.nm is None and rep.kappa_eq is None
    assert rep.gauss_kronecker == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(DegenerateError):
        rep.require("nm")
    jsonschema.validate(rep.to_dict(), SCHEMA)
    with pytest.raises(DegenerateError):
        invariants.normal_vector(fld, [1, 1, 1, 1, 1])


def test_critical_point():
    with pytest.raises(CriticalPointError):
        invariants.analyze(exprlang.builtin("sphere", 3), [0.0, 0.0, 0.0])


def test_report_validates_against_schema():
    for fld, p in [(helicoid(), [0.2, 1.0, -1.0]), (exprlang.builtin("genhel", "x1*x2"), [0.1, 0.2, 1, 2, 3])]:
        d = invariants.analyze(fld, p).to_dict()
        jsonschema.validate(d, SCHEMA)
        assert json.loads(json.dumps(d)) == d


def test_nm_derivative_matches_finite_differences():
    fld = exprlang.from_expression("x1^2 + 2*x2^2 + 3*x3^2 + x1*x2*x3", exprlang.xnames(3))
    p = np.array([0.4, -0.3, 0.6])
    rep = invariants.analyze(fld, p)
    h = 1e-5
    cols = []
    for e in np.eye(3):
        plus = invariants.normal_vector(fld, p + h * e)["nm"]
        minus = invariants.normal_vector(fld, p - h * e)["nm"]
        cols.append((plus - minus) / (2 * h))
    fd = np.array(cols)  # fd[j, i] = d_j nm^i, the layout of rep.dnm
    np.testing.assert_allclose(rep.dnm, fd, atol=1e-7 * max(1.0, np.max(np.abs(fd))))


def test_conormal_pairing_and_shape_operator_kernel():
    fld = exprlang.from_expression("x1^2 + 2*x2^2 - x3^2 + x1*x2*x3 + x4^3", exprlang.xnames(4))
    rep = invariants.analyze(fld, [0.3, 0.5, -0.2, 0.8])
    assert rep.rho @ rep.nm == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(rep.S @ rep.dF, 0, atol=1e-10)
    assert np.trace(rep.S) / rep.n == pytest.approx(rep.kappa_eq, abs=1e-12)


def test_reparameterization_factor():
    # psi(t) = 2t multiplies Ucal by 2^(n+2) = 16 for a surface in R^3
    fld = helicoid()
    rec = invariants.reparam_transform(fld, "2*t", [0.3, 1.0, 0.5])
    assert rec["psiF"]["Ucal"] == pytest.approx(16 * rec["F"]["Ucal"], rel=1e-12)
    assert rec["res_U"] < 1e-12 and rec["res_H"] < 1e-12 and rec["res_nm"] < 1e-12
    rec = invariants.reparam_transform(fld, "-exp(-t)", [0.3, 1.0, 0.5])
    assert max(rec["res_U"], rec["res_H"], rec["res_N"], rec["res_nm"]) < 1e-10


def test_affine_transformation_rule():
    rng = np.random.default_rng(1)
    L = rng.normal(size=(3, 3)) + 2 * np.eye(3)
    b = rng.normal(size=3)
    fld = exprlang.from_expression("x1^2 + 2*x2^2 + 3*x3^2 + x1*x2*x3", exprlang.xnames(3))
    rec = invariants.affine_transform(fld, (L, b), L @ np.array([0.4, -0.3, 0.6]) + b)
    assert max(rec["res_H"], rec["res_U"], rec["res_nm"]) < 1e-10


def test_homogeneity_for_symdet():
    fld = exprlang.builtin("symdet", 3)
    r1, r2 = invariants.homogeneity_check(fld, [1.0, 0.2, -0.1, 0.9, 0.3, 1.4], 3)
    assert r1 < 1e-12 and r2 < 1e-12


def test_gauss_kronecker_two_routes():
    fld = exprlang.builtin("sphere", 3)
    p = [0.3, -1.1, 0.7]
    rep = invariants.analyze(fld, p)
    r = np.linalg.norm(p)
    assert rep.gauss_kronecker == pytest.approx(1 / r**2, rel=1e-12)
    assert invariants.gauss_kronecker_direct(fld, p) == pytest.approx(1 / r**2, rel=1e-12)


def test_reilly_normalization_at_base_point():
    fld = exprlang.builtin("symdet", 2)
    p = [1.3, 0.4, 0.8]
    G = invariants.reilly_normalize(fld, p)
    J = G.jet(p, 2)
    assert J.value == pytest.approx(0.0, abs=1e-14)
    assert abs(forms.bordered_determinant(J.hessian(), J.gradient())) == pytest.approx(1.0, abs=1e-12)


def test_graph_normal_matches_level_set_engine():
    f = exprlang.from_expression("x1^4 + x1^2 + x2^2", ("x1", "x2"))
    base = np.array([0.3, -0.5])
    fld = exprlang.builtin("graph", "x1^4 + x1^2 + x2^2")
    rep = invariants.analyze(fld, [*base, f.value(base)])
    np.testing.assert_allclose(invariants.graph_normal(f, base), rep.nm, atol=1e-12)


def test_nondegeneracy_test_is_scale_free():
    fld = exprlang.from_expression("1e-9*(x1^2 + x2^2 + x3^2)", exprlang.xnames(3))
    rep = invariants.analyze(fld, [1.0, 0.5, 0.2])
    assert rep.nondegenerate and abs(rep.Ucal) < 1e-20
    dF, hess = np.array([1.0, 0.0]), np.array([[0.0, 0.0], [0.0, 0.0]])
    assert not invariants.nondegenerate_at(dF, hess)


def test_balanced_q_gives_same_inverse():
    fld = exprlang.builtin("symdet", 2)
    rep = invariants.analyze(fld, [1.3, 0.4, 0.8])
    one = invariants._sff_inverse(rep.sff, rep.dF, rep.N, rep.Ucal, 1.0)
    np.testing.assert_allclose(rep.sff_inv, one, rtol=1e-11, atol=1e-12)
