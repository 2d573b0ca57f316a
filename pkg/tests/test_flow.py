import csv
import io
import json
import math

import numpy as np
import pytest

from equiaffine import exprlang, flow, ruled
from equiaffine.errors import ArgumentError, DegenerateError


def test_helicoid_flow_matches_closed_form():
    rf = ruled.helicoid_ruled()
    res = flow.compare_exact(rf, [0.0, 1.0, 0.0], t_end=1.0, steps=100)
    assert res["reason"] == flow.COMPLETED and res["steps"] == 100
    assert res["max_error"] <= 1e-12


def test_genhel_flow_matches_closed_form():
    rf = ruled.genhel_ruled("x1*x2")
    res = flow.compare_exact(rf, [0.1, 0.2, 0.5, 0.3, -0.2], t_end=1.0, steps=100)
    assert res["max_error"] <= 1e-10


def test_level_value_drops_linearly():
    fld = exprlang.builtin("helicoid3")
    tr = flow.integrate(fld, [0.0, 1.0, 0.0], 1.0, 50)
    resid, spread = flow.linearity_residual(fld, tr)
    assert spread <= 1e-12 and resid <= 1e-12
    assert tr.F_values[-1] == pytest.approx(tr.F_values[0] - 1.0, abs=1e-12)


def test_radial_symdet_flow_order():
    fld = exprlang.builtin("symdet", 2)
    start = exprlang.symdet_idempotent(2, 0)
    res = flow.convergence_order(fld, start, 1.0, 8)
    assert not res["exact_to_roundoff"]
    assert res["order"] >= 3.5


def test_reverse_undoes_forward():
    fld = exprlang.builtin("symdet", 2)
    start = np.array([1.2, 0.3, 0.9])
    fwd = flow.integrate(fld, start, 0.5, 100)
    back = flow.integrate(fld, fwd.end, 0.5, 100, reverse=True)
    np.testing.assert_allclose(back.end, start, atol=1e-9)


def test_truncation_at_domain_boundary():
    # nm pushes x1 toward 0, where log(x1) stops being defined
    fld = exprlang.builtin("graph", "x2^2/2 - log(x1)")
    tr = flow.integrate(fld, [0.25, 0.3, 0.0], 3.0, 30)
    assert not tr.completed
    assert tr.reason in (flow.DEGENERATE, flow.DOMAIN, flow.CRITICAL)
    assert tr.detail
    assert 1 <= len(tr.times) < 31
    assert all(p[0] > 0 for p in tr.points)


def test_argument_checks():
    fld = exprlang.builtin("helicoid3")
    with pytest.raises(ArgumentError):
        flow.integrate(fld, [0, 1, 0], 1.0, 0)
    with pytest.raises(ArgumentError):
        flow.integrate(fld, [0, 1, 0], -1.0, 10)
    with pytest.raises(ArgumentError):
        flow.integrate(fld, [0, 1], 1.0, 10)
    gn = exprlang.builtin("gn")
    with pytest.raises(DegenerateError):
        flow.integrate(gn, [1, 1, 1, 1, 1], 1.0, 10)


def test_zero_duration():
    tr = flow.integrate(exprlang.builtin("helicoid3"), [0, 1, 0], 0.0, 10)
    assert tr.completed and len(tr.points) == 1


def test_serialization():
    tr = flow.integrate(exprlang.builtin("helicoid3"), [0, 1, 0], 0.1, 4)
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["t", "u", "x", "y", "F"]
    assert len(rows) == 6
    assert float(rows[-1][0]) == pytest.approx(0.1)
    d = json.loads(tr.to_json())
    assert d["reason"] == "completed" and len(d["times"]) == 5


def test_flow_report_with_exact_solution():
    rf = ruled.helicoid_ruled()
    rep = flow.flow_report(rf.field, [[0.0, 1.0, 0.0], [0.5, -1.0, 0.3]], 1.0, 40, exact=flow.ruled_exact(rf))
    assert rep["all_completed"]
    assert rep["max_linearity_residual"] <= 1e-12
    assert rep["min_order"] == math.inf
    assert all(r["exact_error"] <= 1e-12 for r in rep["rows"])


def test_flow_rate():
    assert flow.flow_rate(ruled.helicoid_ruled()) == pytest.approx(1.0)
    rf = ruled.build_ruled_field(ruled.wronskian_pair("exp(-t)", "-exp(t)"))
    assert flow.flow_rate(rf) == pytest.approx(2 ** 0.5)
