"""Ruled hypersurfaces F(u, x) = <A(u), x> + Q(u) built from centroaffine immersions.

Ambient coordinates are ordered (u_1..u_n, x_1..x_{n+1}) and named
x1..x_{2n+1}.  The level sets have dimension 2n, so equiaffine exponents use
2n where the invariants module uses its n.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import exprlang, forms, invariants, jets
from .errors import ArgumentError, CalibrationError
from .exprlang import BinOp, Const, FieldSpec, Var

CALIBRATION_TOL = 1e-9
DEFAULT_BOX = 2.0


@dataclass(frozen=True)
class Calibration:
    kappa: float
    max_dev: float
    calibrated: bool
    predicted: Optional[float] = None


@dataclass(frozen=True)
class CentroaffineImmersion:
    """A map A: M in R^n -> R^{n+1}, one FieldSpec per component."""

    n: int
    components: tuple
    domain: tuple
    calibration: Optional[Calibration] = field(default=None, compare=False)

    @classmethod
    def from_expressions(cls, texts, var_names=None, domain=None, samples=64, seed=0):
        texts = list(texts)
        n = len(texts) - 1
        if n < 1:
            raise ArgumentError("an immersion into R^{n+1} needs at least two components")
        names = tuple(var_names) if var_names else exprlang.xnames(n)
        comps = tuple(exprlang.from_expression(t, names) for t in texts)
        return cls.build(comps, domain, samples, seed)

    @classmethod
    def build(cls, comps, domain=None, samples=64, seed=0, predicted=None):
        n = len(comps) - 1
        if any(c.dim != n for c in comps):
            raise ArgumentError(f"components must be fields on R^{n}")
        box = tuple(domain) if domain is not None else ((-DEFAULT_BOX, DEFAULT_BOX),) * n
        imm = cls(n, tuple(comps), box)
        pts = imm.sample(np.random.default_rng(seed), samples)
        try:
            kappa, dev = calibrate_kappa(imm, pts)
            cal = Calibration(kappa, dev, dev <= CALIBRATION_TOL, predicted)
        except CalibrationError:
            cal = Calibration(0.0, math.inf, False, predicted)
        return cls(n, tuple(comps), box, cal)

    def sample(self, rng, count):
        lo = np.array([b[0] for b in self.domain])
        hi = np.array([b[1] for b in self.domain])
        return lo + (hi - lo) * rng.random((count, self.n))

    def value(self, u):
        return np.array([c.value(u) for c in self.components])

    def frame(self, u):
        """(A(u), dA(u)) with dA of shape (n+1, n)."""
        js = [c.jet(np.atleast_1d(u), 1) for c in self.components]
        return np.array([j.value for j in js]), np.array([j.gradient() for j in js])

    def det(self, u):
        A, dA = self.frame(u)
        return float(np.linalg.det(np.column_stack([A, dA])))

    def printable(self):
        return all(c.ast is not None for c in self.components)

    def to_dict(self):
        cal = self.calibration
        return {
            "n": self.n,
            "components": [c.source for c in self.components],
            "variables": list(self.components[0].var_names),
            "domain": [list(b) for b in self.domain],
            "kappa": None if cal is None else cal.kappa,
            "max_dev": None if cal is None else cal.max_dev,
            "calibrated": None if cal is None else cal.calibrated,
        }


def minors_vector(dA):
    """x-part of V: entries (-1)^{i+1} times the minor of dA with row i deleted."""
    rows = dA.shape[0]
    idx = np.arange(rows)
    return np.array([(-1.0) ** i * np.linalg.det(dA[idx != i]) if rows > 1 else 1.0 for i in range(rows)])


def calibrate_kappa(imm, samples):
    """Mean of det[A | dA] over samples and the largest relative deviation."""
    dets = np.array([imm.det(u) for u in np.atleast_2d(samples)])
    if np.any(dets == 0) or not np.all(np.isfinite(dets)):
        raise CalibrationError("det[A | dA] vanishes at a sample: not centroaffine")
    kappa = float(np.mean(dets))
    if kappa == 0:
        raise CalibrationError("mean det[A | dA] is zero: not centroaffine")
    return kappa, float(np.max(np.abs(dets - kappa)) / abs(kappa))


def wronskian_pair(a, b, domain=(-DEFAULT_BOX, DEFAULT_BOX)):
    """The planar immersion t -> (a(t), b(t)); calibration is kappa = a b' - a' b."""
    return CentroaffineImmersion.from_expressions([a, b], var_names=("t",), domain=(tuple(domain),))


def _one_var(text, name="t"):
    return exprlang.parse(text, 1, [name]) if isinstance(text, str) else text


def extension_lift(B, a, b, c, domain=None, samples=64, seed=0):
    """A(t, u) = (a(t) B(u c(t)), b(t)) on R x R^{n-1}."""
    if not B.printable():
        raise ArgumentError("extension_lift needs immersion components with expressions")
    if B.calibration is None or not B.calibration.calibrated:
        raise CalibrationError("base immersion is not calibrated")
    k = B.n
    n = k + 1
    names = exprlang.xnames(n)
    a_ast, b_ast, c_ast = (_one_var(s) for s in (a, b, c))
    t_var = Var(0, names[0])
    a_t, b_t, c_t = (exprlang.substitute(e, [t_var]) for e in (a_ast, b_ast, c_ast))
    box = tuple(domain) if domain is not None else ((-DEFAULT_BOX, DEFAULT_BOX),) * n
    fa = exprlang.compile_ast(a_ast)
    grid = np.linspace(box[0][0], box[0][1], 401)
    vals = np.array([fa([t]) for t in grid])
    if np.any(vals == 0) or np.any(np.sign(vals) != np.sign(vals[0])):
        raise ArgumentError("a(t) vanishes on the interval")
    repl = [BinOp("*", Var(j + 1, names[j + 1]), c_t) for j in range(k)]
    comps = [BinOp("*", a_t, exprlang.substitute(comp.ast, repl)) for comp in B.components]
    comps.append(b_t)
    fields = tuple(
        FieldSpec(dim=n, var_names=names, fn=exprlang.compile_ast(e), source=exprlang.to_string(e), ast=e)
        for e in comps
    )
    imm = CentroaffineImmersion.build(fields, box, samples, seed)
    # magnitude predicted by the lift: |kappa_B (a b' - a' b) (a c)^{n-1}|
    fb, fc = exprlang.compile_ast(b_ast), exprlang.compile_ast(c_ast)
    t0 = 0.5 * (box[0][0] + box[0][1])
    ja, jb = fa([jets.seed([t0], 0, 1)]), fb([jets.seed([t0], 0, 1)])
    ja = ja if isinstance(ja, jets.Jet) else jets.Jet.constant(1, 1, ja)
    jb = jb if isinstance(jb, jets.Jet) else jets.Jet.constant(1, 1, jb)
    w = ja.value * jb.gradient()[0] - ja.gradient()[0] * jb.value
    pred = abs(B.calibration.kappa * w * (ja.value * fc([t0])) ** (n - 1))
    return CentroaffineImmersion(imm.n, imm.components, imm.domain, Calibration(
        imm.calibration.kappa, imm.calibration.max_dev, imm.calibration.calibrated, pred))


def graph_style_immersion(g, kappa0=1.0, n=2):
    """a^1 = g(u) + kappa0, a^{i+1} = u^i, with g homogeneous of degree one."""
    names = exprlang.xnames(n)
    texts = [f"({g}) + {exprlang._num(kappa0)}"] + list(names)
    return CentroaffineImmersion.from_expressions(texts)


def spherical_polar():
    """(sin t cos s, sin t sin s, cos t) on 0.2 < t < 1.4, without reparameterization."""
    return CentroaffineImmersion.from_expressions(
        ["sin(x1)*cos(x2)", "sin(x1)*sin(x2)", "cos(x1)"], domain=((0.2, 1.4), (-2.0, 2.0))
    )


@dataclass(frozen=True)
class RuledField:
    base: CentroaffineImmersion
    Q: FieldSpec
    field: FieldSpec
    kappa: float

    @property
    def n(self):
        return self.base.n

    def split(self, point):
        p = np.asarray(point, dtype=float)
        return p[: self.n], p[self.n :]

    def sample(self, rng, count, box=DEFAULT_BOX):
        u = self.base.sample(rng, count)
        x = rng.uniform(-box, box, (count, self.n + 1))
        return np.hstack([u, x])

    def to_dict(self):
        d = self.base.to_dict()
        d.update({"Q": self.Q.source, "field": self.field.source, "kappa": self.kappa})
        return d


def build_ruled_field(A, Q="0"):
    if A.calibration is None or not A.calibration.calibrated:
        raise CalibrationError(
            f"immersion is not calibrated (max deviation {getattr(A.calibration, 'max_dev', None)})"
        )
    n = A.n
    m = 2 * n + 1
    names = exprlang.xnames(m)
    q_field = Q if isinstance(Q, FieldSpec) else exprlang.from_expression(str(Q), exprlang.xnames(n))
    if q_field.dim != n:
        raise ArgumentError(f"Q must be a field on R^{n}")
    if A.printable() and q_field.ast is not None:
        ident = list(range(n))
        node = None
        for i, comp in enumerate(A.components):
            term = BinOp("*", Var(n + i, names[n + i]), exprlang.remap(comp.ast, ident, names))
            node = term if node is None else BinOp("+", node, term)
        q_ast = exprlang.remap(q_field.ast, ident, names)
        if not (isinstance(q_ast, Const) and q_ast.value == 0):
            node = BinOp("+", node, q_ast)
        fld = FieldSpec(dim=m, var_names=names, fn=exprlang.compile_ast(node),
                        source=exprlang.to_string(node), tag="ruled", ast=node)
    else:
        comps = [c.fn for c in A.components]
        qf = q_field.fn

        def fn(xs):
            u = xs[:n]
            total = qf(u)
            for i, c in enumerate(comps):
                total = total + c(u) * xs[n + i]
            return total

        fld = FieldSpec(dim=m, var_names=names, fn=fn, source=None, tag="ruled")
    return RuledField(A, q_field, fld, A.calibration.kappa)


def v_field(rf, point):
    """V = sum (-1)^{i+1} dA^{(i)} d/dx_i as an ambient vector."""
    u, _ = rf.split(point)
    _, dA = rf.base.frame(u)
    return np.concatenate([np.zeros(rf.n), minors_vector(dA)])


def ruling_frame(rf, u):
    """Basis Y_I = a^{I+1} d/dx_I - a^I d/dx_{I+1} of ker A(u), padded to ambient vectors."""
    A, _ = rf.base.frame(u)
    n = rf.n
    Y = np.zeros((n + 1, n))
    for I in range(n):
        Y[I, I] = A[I + 1]
        Y[I + 1, I] = -A[I]
    if np.linalg.matrix_rank(Y, tol=1e-12 * max(1.0, np.max(np.abs(A)))) < n:
        # consecutive zeros in A: pivoted nullspace instead
        _, _, vt = np.linalg.svd(A[None, :])
        Y = vt[1:].T
    return np.vstack([np.zeros((n, n)), Y])


def _pfaffian(W):
    m = len(W)
    if m == 0:
        return 1.0
    if m % 2:
        return 0.0
    total = 0.0
    idx = list(range(1, m))
    for k, j in enumerate(idx):
        if W[0, j] == 0:
            continue
        rest = [i for i in idx if i != j]
        total += (-1) ** k * W[0, j] * _pfaffian(W[np.ix_(rest, rest)])
    return total


def contact_data(rf, point):
    """(beta, Omega) at a point: beta = sum a^i dx_i and Omega = d beta as matrices."""
    n = rf.n
    u, _ = rf.split(point)
    A, dA = rf.base.frame(u)
    m = 2 * n + 1
    beta = np.concatenate([np.zeros(n), A])
    W = np.zeros((m, m))
    W[:n, n:] = dA.T
    W[n:, :n] = -dA
    return beta, W


def top_wedge(beta, W):
    """Coefficient of beta ^ (d beta)^n on the coordinate volume form."""
    m = len(beta)
    n = (m - 1) // 2
    total = 0.0
    for k in range(m):
        if beta[k] == 0:
            continue
        rest = [i for i in range(m) if i != k]
        total += (-1) ** k * beta[k] * _pfaffian(W[np.ix_(rest, rest)])
    return math.factorial(n) * total


def contact_symplectic_check(rf, points):
    n = rf.n
    worst = {"wedge": 0.0, "reeb_beta": 0.0, "reeb_omega": 0.0, "lagrangian": 0.0, "min_singular": math.inf}
    kappas = []
    for p in np.atleast_2d(points):
        u, _ = rf.split(p)
        kappa = rf.base.det(u)
        kappas.append(kappa)
        beta, W = contact_data(rf, p)
        expected = (-1) ** (n * (n + 1) // 2) * math.factorial(n) * kappa
        scale = math.factorial(n) * max(abs(kappa), 1e-300)
        worst["wedge"] = max(worst["wedge"], abs(top_wedge(beta, W) - expected) / scale)
        V = v_field(rf, p)
        worst["reeb_beta"] = max(worst["reeb_beta"], abs(beta @ V - kappa) / max(abs(kappa), 1e-300))
        worst["reeb_omega"] = max(worst["reeb_omega"], float(np.max(np.abs(W @ V))))
        T = ruling_frame(rf, u)
        worst["lagrangian"] = max(worst["lagrangian"], float(np.max(np.abs(T.T @ W @ T))))
        dF = rf.field.jet(p, 1).gradient()
        E = forms.kernel_basis(dF)
        sv = np.linalg.svd(E.T @ W @ E, compute_uv=False)
        worst["min_singular"] = min(worst["min_singular"], float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0)
    worst["contact"] = bool(min(abs(k) for k in kappas) > 0 and worst["min_singular"] > 1e-10)
    worst["kappa_range"] = (float(min(kappas)), float(max(kappas)))
    return worst


def level_parameterization(rf, t, r, s):
    """Phi(t, r, s) = (r, kappa^{-1}(t - Q(r)) V(r) + sum s^I Y_I(r)); F(Phi) = t."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    n = rf.n
    if r.size != n or s.size != n:
        raise ArgumentError(f"r and s must have {n} entries")
    for x, (lo, hi) in zip(r, rf.base.domain):
        if not lo <= x <= hi:
            raise ArgumentError(f"r = {r.tolist()} is outside the immersion domain")
    A, dA = rf.base.frame(r)
    V = minors_vector(dA)
    kappa = float(np.linalg.det(np.column_stack([A, dA])))
    Y = ruling_frame(rf, r)[n:]
    x = (t - rf.Q.value(r)) / kappa * V + Y @ s
    return np.concatenate([r, x])


def ruled_coordinates(rf, point):
    """Inverse of level_parameterization: (t, r, s) with Phi(t, r, s) = point."""
    n = rf.n
    r, x = rf.split(point)
    t = rf.field.value(point)
    A, dA = rf.base.frame(r)
    kappa = float(np.linalg.det(np.column_stack([A, dA])))
    resid = x - (t - rf.Q.value(r)) / kappa * minors_vector(dA)
    Y = ruling_frame(rf, r)[n:]
    s, *_ = np.linalg.lstsq(Y, resid, rcond=None)
    return t, r, s


def affine_sphere_test(imm, points, tol=1e-9):
    """Improper affine sphere iff V is constant (image of A in a hyperplane)."""
    Vs = []
    for u in np.atleast_2d(points):
        _, dA = imm.frame(u)
        Vs.append(minors_vector(dA))
    Vs = np.array(Vs)
    diff = float(np.max(np.abs(Vs[:, None, :] - Vs[None, :, :])))
    if diff <= tol:
        V = Vs.mean(axis=0)
        level = float(np.mean([imm.value(u) @ V for u in np.atleast_2d(points)]))
        return {"verdict": "improper affine sphere", "variation": diff, "functional": V.tolist(), "level": level}
    return {"verdict": "not an affine sphere", "variation": diff}


def expected_normal(rf, point):
    """-sign(kappa) |kappa|^{-2n/(2n+2)} V, from N = (-1)^n kappa V and U(F) = (-1)^n kappa^2."""
    u, _ = rf.split(point)
    kappa = rf.base.det(u)
    hd = 2 * rf.n
    return -math.copysign(1.0, kappa) * abs(kappa) ** (-hd / (hd + 2)) * v_field(rf, point)


def ruled_invariant_suite(rf, points):
    n = rf.n
    hd = 2 * n
    keys = ("kappa_eq", "kappa_amc", "normal", "S2", "ker_S", "radical", "adjugate", "U_squared",
            "isotropy", "dF_ruling", "flow_rate")
    worst = dict.fromkeys(keys, 0.0)
    inertia_ok = rank_ok = True
    sign = (-1) ** n
    for p in np.atleast_2d(points):
        rep = invariants.analyze(rf.field, p)
        V = v_field(rf, p)
        u, _ = rf.split(p)
        kappa = rf.base.det(u)
        worst["kappa_eq"] = max(worst["kappa_eq"], abs(rep.require("kappa_eq")))
        worst["kappa_amc"] = max(worst["kappa_amc"], abs(rep.kappa_amc))
        worst["normal"] = max(worst["normal"], float(np.max(np.abs(rep.nm - expected_normal(rf, p)))))
        St = rep.shape_operator_tangent()
        worst["S2"] = max(worst["S2"], float(np.linalg.norm(St @ St, 2)))
        T = ruling_frame(rf, u)
        worst["ker_S"] = max(worst["ker_S"], float(np.max(np.abs(T.T @ rep.S))))
        hn = np.linalg.norm(rep.hess)
        worst["radical"] = max(worst["radical"], float(np.linalg.norm(rep.hess @ V) / (hn * np.linalg.norm(V))))
        UV = sign * np.outer(V, V)
        worst["adjugate"] = max(worst["adjugate"], float(np.max(np.abs(rep.U - UV)) / np.max(np.abs(UV))))
        worst["U_squared"] = max(worst["U_squared"], abs(rep.Ucal - sign * kappa**2))
        worst["isotropy"] = max(worst["isotropy"], float(np.max(np.abs(T.T @ rep.k @ T))))
        worst["dF_ruling"] = max(worst["dF_ruling"], float(np.max(np.abs(rep.dF @ T))))
        worst["flow_rate"] = max(worst["flow_rate"], abs(rep.dF @ rep.nm + abs(rep.Ucal) ** (1 / (hd + 2))))
        inertia_ok &= tuple(rep.inertia_k) == (n, n, 0)
        rank_ok &= forms.inertia(rep.hess).zero == 1
    worst["inertia_split"] = bool(inertia_ok)
    worst["hessian_nullity_one"] = bool(rank_ok)
    return worst


def circle():
    return CentroaffineImmersion.from_expressions(["cos(x1)", "sin(x1)"])


def ahelic():
    """The lift of the circle by (sech, tanh, cosh^2), calibrated with |kappa| = 1."""
    return extension_lift(circle(), "sech(t)", "tanh(t)", "cosh(t)^2")


def helicoid_ruled():
    return build_ruled_field(wronskian_pair("sin(t)", "cos(t)"))


def genhel_ruled(Q="0"):
    return build_ruled_field(ahelic(), Q)
