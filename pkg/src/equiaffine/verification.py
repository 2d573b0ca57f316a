"""Acceptance campaigns: one function per criterion, grouped into suites.

Each criterion returns a :class:`CriterionResult` holding named checks with
the observed value and its tolerance.  Campaigns are seeded and
deterministic.  ``run_suite`` drives the ``verify`` command.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import exprlang, flow, forms, invariants, ruled
from .errors import EquiaffineError
from .exprlang import builtin, from_expression, symdet_coordinates, symdet_idempotent


@dataclass
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    relation: str = "<="
    detail: str = ""

    def line(self):
        mark = "ok  " if self.passed else "FAIL"
        val = self.value if isinstance(self.value, str) else f"{self.value:.3e}"
        tol = self.tol if isinstance(self.tol, str) else f"{self.tol:.1e}"
        extra = f"  {self.detail}" if self.detail else ""
        return f"  [{mark}] {self.name:<52} {val:>12} {self.relation} {tol:<8}{extra}"


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self):
        return bool(self.checks) and all(c.passed for c in self.checks)

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        # no timings here: suite output must be reproducible byte for byte
        return f"criterion {self.number:>2} {status}  {self.title}"

    def table(self):
        return "\n".join([self.summary(), *(c.line() for c in self.checks)])


def at_most(name, value, tol, detail=""):
    value = float(value)
    return Check(name, value, tol, bool(value <= tol), "<=", detail)


def at_least(name, value, tol, detail=""):
    value = float(value)
    return Check(name, value, tol, bool(value >= tol), ">=", detail)


def holds(name, ok, detail=""):
    return Check(name, "true" if ok else "false", "true", bool(ok), "==", detail)


def _rng(seed, number):
    return np.random.default_rng([int(seed), int(number)])


def _criterion(number, title):
    def wrap(fn):
        def run(seed=0):
            t0 = time.perf_counter()
            res = CriterionResult(number, title)
            res.checks = fn(_rng(seed, number))
            res.seconds = time.perf_counter() - t0
            return res

        run.number = number
        run.title = title
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return wrap


# sampling helpers

def random_symmetric(rng, n, min_abs_det=0.05):
    while True:
        A = rng.normal(size=(n, n))
        X = (A + A.T) / 2
        if abs(np.linalg.det(X)) >= min_abs_det:
            return X


def unimodular(rng, n):
    """Random g with |det g| = 1."""
    while True:
        g = rng.normal(size=(n, n))
        d = np.linalg.det(g)
        if abs(d) > 0.1:
            return g / abs(d) ** (1.0 / n)


def congruent_to(rng, E, count):
    """Points g E g^T with |det g| = 1, all on the level set of det through E."""
    n = len(E)
    return [symdet_coordinates(g @ E @ g.T) for g in (unimodular(rng, n) for _ in range(count))]


def random_quartic(rng, m=3, terms=8):
    """A random polynomial of degree <= 4 in m variables, as source text."""
    names = exprlang.xnames(m)
    parts = []
    for _ in range(terms):
        deg = rng.integers(1, 5)
        idx = rng.integers(0, m, size=deg)
        mono = "*".join(names[i] for i in idx)
        parts.append(f"{rng.normal():.6f}*{mono}")
    return " + ".join(parts).replace("+ -", "- ")


def _nondegenerate_points(fld, rng, count, box=1.0, tries=50, min_rcond=None):
    """Random regular nondegenerate points; ``min_rcond`` also bounds the
    conditioning of the bordered Hessian from below."""
    pts = []
    for _ in range(count * tries):
        p = rng.uniform(-box, box, fld.dim)
        try:
            rep = invariants.analyze(fld, p)
        except EquiaffineError:
            continue
        if min_rcond is not None and rep.nondegenerate:
            sv = np.linalg.svd(forms.bordered_matrix(rep.hess, rep.dF), compute_uv=False)
            if sv[-1] < min_rcond * sv[0]:
                continue
        if rep.nondegenerate:
            pts.append(p)
            if len(pts) == count:
                break
    return pts


def helicoid_level_points(rng, level, count):
    """Points (u, x, y) with x sin u + y cos u = level, |u| <= 1.2."""
    u = rng.uniform(-1.2, 1.2, count)
    x = rng.uniform(-2, 2, count)
    y = (level - x * np.sin(u)) / np.cos(u)
    return np.column_stack([u, x, y])


# independent dense determinant for the identity campaign

def dense_lu_det(a):
    """Determinant by Doolittle elimination with partial pivoting, in plain Python."""
    a = [list(map(float, row)) for row in a]
    m = len(a)
    det = 1.0
    for k in range(m):
        p = max(range(k, m), key=lambda r: abs(a[r][k]))
        if a[p][k] == 0.0:
            return 0.0
        if p != k:
            a[k], a[p] = a[p], a[k]
            det = -det
        piv = a[k][k]
        det *= piv
        for r in range(k + 1, m):
            f = a[r][k] / piv
            if f:
                row, top = a[r], a[k]
                for c in range(k + 1, m):
                    row[c] -= f * top[c]
    return det


def _hadamard(a):
    # product of row norms bounds |det| and sets the scale for relative error
    return float(np.prod(np.maximum(np.linalg.norm(np.asarray(a, float), axis=1), 1e-300)))


# criteria

@_criterion(1, "helicoid golden values")
def criterion_1(rng):
    fld = builtin("helicoid3")
    worst = dict(U=0.0, H=0.0, nm=0.0, kappa=0.0)
    for _ in range(100):
        p = np.array([rng.uniform(-math.pi, math.pi), *rng.uniform(-3, 3, 2)])
        rep = invariants.analyze(fld, p)
        u = p[0]
        worst["U"] = max(worst["U"], abs(rep.Ucal + 1))
        worst["H"] = max(worst["H"], abs(rep.H))
        worst["nm"] = max(worst["nm"], float(np.max(np.abs(rep.require("nm") - [0, -math.sin(u), -math.cos(u)]))))
        worst["kappa"] = max(worst["kappa"], abs(rep.require("kappa_eq")))
    return [
        at_most("|Ucal + 1|", worst["U"], 1e-10),
        at_most("|H|", worst["H"], 1e-10),
        at_most("|nm - (0, -sin u, -cos u)|_max", worst["nm"], 1e-9),
        at_most("|kappa_eq|", worst["kappa"], 1e-8),
    ]


GENHEL_QS = ("0", "x1*x2", "sin(x1) + x2^3")


@_criterion(2, "genhel: Ucal = 1, zero curvature, split metric, Lagrangian ruling in ker S")
def criterion_2(rng):
    checks = []
    for Q in GENHEL_QS:
        fld = builtin("genhel", Q)
        rf = ruled.genhel_ruled(Q)
        pts = rf.sample(rng, 50)
        agree = max(abs(fld.value(p) - rf.field.value(p)) for p in pts)
        ucal = max(abs(invariants.u_invariant(fld, p)[0] - 1) for p in pts)
        suite = ruled.ruled_invariant_suite(rf, pts)
        contact = ruled.contact_symplectic_check(rf, pts)
        tag = f"Q={Q}"
        checks += [
            at_most(f"{tag}: builtin vs ruled construction", agree, 1e-12),
            at_most(f"{tag}: |Ucal - 1|", ucal, 1e-9),
            at_most(f"{tag}: |kappa_eq|", suite["kappa_eq"], 1e-7),
            holds(f"{tag}: inertia_k = (2,2,0)", suite["inertia_split"]),
            at_most(f"{tag}: |S^2| operator norm", suite["S2"], 1e-9),
            at_most(f"{tag}: Omega(T_I, T_J) (Lagrangian)", contact["lagrangian"], 1e-9),
            at_most(f"{tag}: S(T_I) (ruling in ker S)", suite["ker_S"], 1e-9),
        ]
    return checks


@_criterion(3, "determinant example n = 2, 3")
def criterion_3(rng):
    checks = []
    for n in (2, 3):
        fld = builtin("symdet", n)
        d = comb(n + 1, 2)
        for p in range((n + 1) // 2):
            E = symdet_idempotent(n, p)
            rep = invariants.analyze(fld, E)
            target = (-1) ** (d - 1) * (n - 1)
            checks.append(at_most(f"n={n} E{p}: |H - {target}|", abs(rep.H - target), 1e-10))
            pos = 2 * p * (n - 2 * p) + 1
            want = (pos, d - 1 - 2 * p * (n - 2 * p), 0)
            got = tuple(forms.inertia(rep.hess))
            checks.append(holds(f"n={n} E{p}: Hessian inertia {want}", got == want, f"got {got}"))
            kwant = (pos - 1, d - 1 - 2 * p * (n - 2 * p), 0)
            Emat = np.diag([1.0] * (n - 2 * p) + [-1.0] * (2 * p))
            ks = {tuple(invariants.analyze(fld, q).inertia_k) for q in [E, *congruent_to(rng, Emat, 20)]}
            checks.append(holds(f"n={n} C{p}: metric inertia {kwant}", ks == {kwant}, f"got {sorted(ks)}"))
        glob = ucal_rel = 0.0
        for _ in range(100):
            X = random_symmetric(rng, n)
            q = symdet_coordinates(X)
            rep = invariants.analyze(fld, q)
            P = rep.F
            want = (-1) ** n * (n - 1) * (-P) ** ((n + 1) * (n - 2) // 2)
            glob = max(glob, abs(rep.H - want) / max(abs(want), 1e-300))
            lhs, rhs = (n - 1) * rep.Ucal, n * P * rep.H
            ucal_rel = max(ucal_rel, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
        checks.append(at_most(f"n={n}: H(P) = (-1)^n (n-1)(-P)^((n+1)(n-2)/2), rel", glob, 1e-8))
        checks.append(at_most(f"n={n}: (n-1) Ucal = n P H, rel", ucal_rel, 1e-9))
    return checks


def _gn_triple(rng, degree):
    # unit-size coefficients keep the absolute Ucal bound meaningful
    def poly():
        return " + ".join(f"{rng.uniform(-1, 1):.6f}*x1^{degree - k}*x2^{k}" for k in range(degree + 1))

    return poly(), poly(), poly()


@_criterion(4, "Gordan-Noether family: Ucal = 0, adj Hess rank 1, K = 0")
def criterion_4(rng):
    checks = []
    cases = [("concrete P", ()), ("random degree 2", _gn_triple(rng, 2)), ("random degree 3", _gn_triple(rng, 3))]
    for label, abc in cases:
        fld = builtin("gn", *abc)
        ucal = ucal_rel = rank = gk = gkd = 0.0
        count = 0
        while count < 100:
            p = rng.uniform(-1, 1, 5)
            try:
                rep = invariants.analyze(fld, p)
            except EquiaffineError:
                continue
            count += 1
            ucal = max(ucal, abs(rep.Ucal))
            ucal_rel = max(ucal_rel, abs(rep.Ucal) / _hadamard(forms.bordered_matrix(rep.hess, rep.dF)))
            s = np.linalg.svd(rep.U, compute_uv=False)
            rank = max(rank, s[1] / s[0] if s[0] > 0 else math.inf)
            gk = max(gk, abs(rep.gauss_kronecker))
            gkd = max(gkd, abs(invariants.gauss_kronecker_direct(fld, p)))
        checks += [
            at_most(f"{label}: |Ucal|", ucal, 1e-12),
            at_most(f"{label}: |Ucal| / Hadamard bound", ucal_rel, 1e-12),
            at_most(f"{label}: sigma2/sigma1 of adj Hess (rank 1)", rank, 1e-9),
            at_most(f"{label}: |Ucal/|dF|^(n+2)|", gk, 1e-10),
            at_most(f"{label}: |K| Euclidean route", gkd, 1e-10),
        ]
    return checks


_PSI_POOL = ("t^3 + t", "2*t", "-3*t + 1", "exp(t/2)", "t + sin(t)/2", "-t^3 - 2*t", "sinh(t)", "-exp(-t)")


def _equivariance_pool():
    pool = [builtin("helicoid3"), builtin("genhel", "x1*x2"), builtin("symdet", 2), builtin("symdet", 3),
            builtin("sphere", 3), builtin("graph", "x1^4 + x1^2 + x2^2")]
    rng = np.random.default_rng(2024)
    pool += [from_expression(random_quartic(rng), exprlang.xnames(3), tag="quartic") for _ in range(4)]
    return pool


def _random_linear(rng, m):
    q, _ = np.linalg.qr(rng.normal(size=(m, m)))
    return q @ np.diag(np.exp(rng.uniform(-0.5, 0.5, m))) @ np.linalg.qr(rng.normal(size=(m, m)))[0]


@_criterion(5, "equivariance campaigns (1000 trials each)")
def criterion_5(rng):
    pool = _equivariance_pool()
    trials = 1000
    aff = dict(H=0.0, U=0.0, nm=0.0)
    proj = rep_U = rep_H = rep_N = sign_rule = 0.0
    n_nm = n_sign = 0
    for _ in range(trials):
        fld = pool[rng.integers(len(pool))]
        m = fld.dim
        # the base point of F stays in the sampling box; g moves it
        y = rng.uniform(-1, 1, m)
        L = _random_linear(rng, m)
        b = rng.normal(size=m)
        rec = invariants.affine_transform(fld, (L, b), L @ y + b)
        aff["H"] = max(aff["H"], rec["res_H"])
        aff["U"] = max(aff["U"], rec["res_U"])
        if "res_nm" in rec:
            aff["nm"] = max(aff["nm"], rec["res_nm"])
            n_nm += 1
    for _ in range(trials):
        fld = pool[rng.integers(len(pool))]
        m = fld.dim
        p = rng.uniform(-1, 1, m)
        A = np.eye(m) + 0.2 * rng.normal(size=(m, m))
        c = 0.2 * rng.normal(size=m)
        rec = invariants.affine_transform(fld, (np.eye(m), np.zeros(m)), p,
                                          projective=(A, 0.2 * rng.normal(size=m), c, 1.0))
        proj = max(proj, rec["res_proj"])
    for _ in range(trials):
        fld = pool[rng.integers(len(pool))]
        p = rng.uniform(-1, 1, fld.dim)
        psi = _PSI_POOL[rng.integers(len(_PSI_POOL))]
        rec = invariants.reparam_transform(fld, psi, p)
        rep_U = max(rep_U, rec["res_U"])
        rep_H = max(rep_H, rec["res_H"])
        rep_N = max(rep_N, rec["res_N"])
        if "res_nm" in rec:
            sign_rule = max(sign_rule, rec["res_nm"])
            n_sign += 1
    return [
        at_most("affine: g.H(F) = det^2 l(g) H(g.F)", aff["H"], 1e-8),
        at_most("affine: g.U(F) = det^2 l(g) U(g.F)", aff["U"], 1e-8),
        at_most("affine: L nm(F) = |det L|^(2/(n+2)) nm(g.F)", aff["nm"], 1e-8, f"{n_nm} nondegenerate trials"),
        at_most("projective: U(F o Phi) = (det T Phi)^2 U(F) o Phi", proj, 1e-8),
        at_most("reparam: U(psi o F) = psi'^(n+2) U(F)", rep_U, 1e-8),
        at_most("reparam: H(psi o F) = psi'^(n+1) (H + psi''/psi' U)", rep_H, 1e-8),
        at_most("reparam: N(psi o F) = psi'^(n+1) N(F)", rep_N, 1e-8),
        at_most("nm sign rule: nm(psi o F) = sign(psi') nm(F)", sign_rule, 1e-8, f"{n_sign} nondegenerate trials"),
    ]


def _gk_rel(fld, p):
    rep = invariants.analyze(fld, p)
    direct = invariants.gauss_kronecker_direct(fld, p)
    norm = float(np.linalg.norm(rep.dF))
    floor = invariants._ucal_scale(rep.dF, rep.hess) / norm ** (rep.n + 2)
    return abs(direct - rep.gauss_kronecker) / max(abs(direct), abs(rep.gauss_kronecker), floor)


@_criterion(6, "Gauss-Kronecker: Euclidean route vs Ucal/|dF|^(n+2)")
def criterion_6(rng):
    checks = []
    fields = {"sphere(3)": builtin("sphere", 3), "sphere(4)": builtin("sphere", 4),
              "helicoid3": builtin("helicoid3"), "genhel": builtin("genhel", "x1*x2")}
    for label, fld in fields.items():
        pts = _nondegenerate_points(fld, rng, 50, box=1.5)
        checks.append(at_most(f"{label}: relative gap", max(_gk_rel(fld, p) for p in pts), 1e-8, f"{len(pts)} points"))
    worst = 0.0
    used = redrawn = 0
    while used < 100 and redrawn < 100:
        fld = from_expression(random_quartic(rng), exprlang.xnames(3), tag="quartic")
        pts = _nondegenerate_points(fld, rng, 1)
        if not pts:
            # e.g. a quartic missing a variable: degenerate everywhere
            redrawn += 1
            continue
        worst = max(worst, _gk_rel(fld, pts[0]))
        used += 1
    checks.append(at_most("100 random quartics: relative gap", worst, 1e-8,
                          f"{used} fields, {redrawn} everywhere-degenerate redrawn"))
    checks.append(holds("100 quartics with nondegenerate samples", used == 100))
    return checks


GRAPH_FS = ("(x1^2 + x2^2)/2", "x1*x2", "x1^4 + x1^2 + x2^2")


@_criterion(7, "graph formula vs level-set engine")
def criterion_7(rng):
    checks = []
    for f in GRAPH_FS:
        ff = from_expression(f, ["x1", "x2"])
        G = builtin("graph", f)
        worst = 0.0
        for _ in range(50):
            x = rng.uniform(-1.5, 1.5, 2)
            p = np.append(x, ff.value(x) + rng.uniform(-1, 1))
            nm = invariants.analyze(G, p).require("nm")
            worst = max(worst, float(np.max(np.abs(invariants.graph_normal(ff, x) - nm))) / max(1.0, np.max(np.abs(nm))))
        checks.append(at_most(f"f = {f}", worst, 1e-9))
    return checks


@_criterion(8, "Reilly normalization |U(G)| = 1 on the level set")
def criterion_8(rng):
    hel = builtin("helicoid3")
    p0 = np.array([0.3, 1.0, -0.5])
    G = invariants.reilly_normalize(hel, p0)
    worst_h = max(abs(abs(invariants.u_invariant(G, q)[0]) - 1)
                  for q in helicoid_level_points(rng, hel.value(p0), 50))
    sd = builtin("symdet", 2)
    E0 = symdet_idempotent(2, 0)
    G2 = invariants.reilly_normalize(sd, E0)
    worst_s = max(abs(abs(invariants.u_invariant(G2, q)[0]) - 1) for q in congruent_to(rng, np.eye(2), 50))
    return [
        at_most("helicoid3: ||U(G)| - 1|", worst_h, 1e-9),
        at_most("symdet(2) on {P = 1}: ||U(G)| - 1|", worst_s, 1e-9),
    ]


@_criterion(9, "flat level sets: mu ^ rho = 0, nm parallel to N, curvature formula")
def criterion_9(rng):
    checks = []
    hel = builtin("helicoid3")
    sd = builtin("symdet", 2)
    samples = {
        "helicoid3": (hel, [np.array([rng.uniform(-3, 3), *rng.uniform(-2, 2, 2)]) for _ in range(50)]),
        "symdet(2)": (sd, congruent_to(rng, np.eye(2), 50)),
    }
    for label, (fld, pts) in samples.items():
        rep = invariants.level_flatness_test(fld, pts)
        checks += [
            at_most(f"{label}: |mu ^ rho|", rep["wedge"], 1e-9),
            at_most(f"{label}: angle(nm, N)", rep["angle"], 1e-9),
            at_most(f"{label}: |flat formula - kappa_eq|", rep["kappa_gap"], 1e-8),
        ]
    target = 2 ** -0.75
    gap = max(abs(invariants.analyze(sd, p).kappa_eq - target) for p in samples["symdet(2)"][1])
    checks.append(at_most("symdet(2): |kappa_eq - 2^(-3/4)|", gap, 1e-9))
    return checks


@_criterion(10, "affine-sphere dichotomy")
def criterion_10(rng):
    # image inside the hyperplane a^3 = 1, with |A dA| = 1
    flat = ruled.CentroaffineImmersion.from_expressions(["x1 + sin(x2)", "x2", "1"])
    a = ruled.affine_sphere_test(flat, flat.sample(rng, 50))
    b = ruled.affine_sphere_test(ruled.ahelic(), ruled.ahelic().sample(rng, 50))
    return [
        at_most("hyperplane image: V variation", a["variation"], 1e-9, a["verdict"]),
        holds("hyperplane image: verdict improper affine sphere", a["verdict"] == "improper affine sphere"),
        at_least("ahelic immersion: V variation", b["variation"], 0.1, b["verdict"]),
        holds("ahelic immersion: verdict not an affine sphere", b["verdict"] == "not an affine sphere"),
    ]


@_criterion(11, "Cheng-Yau potential on positive-definite 2x2")
def criterion_11(rng):
    fld = builtin("cheng_yau_det", 2)
    worst = 0.0
    for _ in range(50):
        A = rng.normal(size=(2, 2))
        X = A @ A.T + 0.05 * np.eye(2)
        p = symdet_coordinates(X)
        H = invariants.hessian_determinant(fld, p)
        target = math.exp(2 * fld.value(p))
        worst = max(worst, abs(H - target) / target)
    return [at_most("|H(F) - e^(2F)| / e^(2F)", worst, 1e-7)]


@_criterion(12, "flow: RK4 vs exact ruled flow, order, linearity")
def criterion_12(rng):
    checks = []
    cases = {"helicoid3": ruled.helicoid_ruled(), "genhel(Q=x1*x2)": ruled.genhel_ruled("x1*x2")}
    for label, rf in cases.items():
        starts = rf.sample(rng, 3, box=1.0)
        err = lin = 0.0
        orders = []
        exact_flags = []
        for s in starts:
            err = max(err, flow.compare_exact(rf, s, 1.0, 100)["max_error"])
            tr = flow.integrate(rf.field, s, 1.0, 100, error_estimate=False)
            res, _ = flow.linearity_residual(rf.field, tr)
            lin = max(lin, res if res is not None else math.inf)
            co = flow.convergence_order(rf.field, s, 1.0, 25, lambda t, s=s: flow.exact_trajectory(rf, s, t))
            orders.append(co["order"] if co["order"] is not None else -math.inf)
            exact_flags.append(co["exact_to_roundoff"])
        note = "exact to roundoff" if all(exact_flags) else ""
        checks += [
            at_most(f"{label}: sup |RK4 - exact|, 100 steps", err, 1e-6),
            at_least(f"{label}: measured order", min(orders), 3.5, note),
            at_most(f"{label}: F-linearity residual", lin, 1e-7),
        ]
    # straight-line flows above carry no truncation error; this flow does
    sd = builtin("symdet", 2)
    E0 = symdet_idempotent(2, 0)
    c = 2 ** -0.75

    def radial(t):
        return np.outer((1 - 1.5 * c * np.asarray(t)) ** (2.0 / 3.0), E0)

    co = flow.convergence_order(sd, E0, 1.0, 25, radial)
    checks.append(at_least("symdet(2) radial flow: measured order", co["order"] or -math.inf, 3.5,
                           f"errors {', '.join(f'{e:.1e}' for e in co['errors'])}"))
    return checks


@_criterion(13, "determinantal identities vs dense LU (1000 instances)")
def criterion_13(rng):
    worst = dict(adjid=0.0, rankone=0.0, fdet=0.0, bordered=0.0)
    for _ in range(1000):
        m = int(rng.integers(2, 7))
        A = rng.normal(size=(m, m))
        b = rng.normal(size=m)
        c = rng.normal(size=m)
        d = rng.normal()
        adjA = forms.adjugate(A)
        detA = forms.determinant(A)
        big = np.block([[A, b[:, None]], [c[None, :], np.array([[d]])]])
        worst["adjid"] = max(worst["adjid"], abs(dense_lu_det(big) - (detA * d - c @ adjA @ b)) / _hadamard(big))
        upd = A + np.outer(b, c)
        lhs = dense_lu_det(upd)
        scale = max(_hadamard(upd), _hadamard(A) * (1 + np.linalg.norm(b) * np.linalg.norm(c)))
        worst["rankone"] = max(worst["rankone"], abs(lhs - (detA + c @ adjA @ b)) / scale)
        S = (A + A.T) / 2
        q = rng.normal()
        lhs = dense_lu_det(S + q * np.outer(b, b))
        rhs = forms.determinant(S) + q * forms.bordered_determinant(S, b)
        scale = max(_hadamard(S + q * np.outer(b, b)), _hadamard(S) * (1 + abs(q) * (b @ b)))
        worst["fdet"] = max(worst["fdet"], abs(lhs - rhs) / scale)
        B = forms.bordered_matrix(S, b)
        oracle = -dense_lu_det(B)
        adj_route = b @ forms.adjugate(S) @ b
        lib = forms.bordered_determinant(S, b)
        worst["bordered"] = max(worst["bordered"], max(abs(lib - oracle), abs(adj_route - oracle)) / _hadamard(B))
    return [
        at_most("Cauchy bordered identity", worst["adjid"], 1e-9),
        at_most("rank-one update det(A + b c^T)", worst["rankone"], 1e-9),
        at_most("det(F_ij + q F_i F_j) = H + q U", worst["fdet"], 1e-9),
        at_most("bordered_determinant = v adj v = -det B", worst["bordered"], 1e-9),
    ]


CRITERIA = {f.number: f for f in (
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
    criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13,
)}


# supplementary property campaigns

@_criterion(101, "forms: adjugate, inverse, Sylvester inertia")
def forms_properties(rng):
    adj = syl = rank1 = inv = 0.0
    syl_ok = True
    for _ in range(300):
        m = int(rng.integers(2, 9))
        A = rng.normal(size=(m, m))
        S = (A + A.T) / 2
        d = forms.determinant(S)
        adj = max(adj, float(np.max(np.abs(forms.adjugate(S) @ S - d * np.eye(m)))) / _hadamard(S))
        if m <= 6:
            g = rng.normal(size=(m, m)) + 2 * np.eye(m)
            syl_ok &= forms.inertia(S) == forms.inertia(g.T @ S @ g)
            v = rng.normal(size=(m, m - 1))
            P = v @ np.diag(rng.normal(size=m - 1)) @ v.T
            s = np.linalg.svd(forms.adjugate(P), compute_uv=False)
            rank1 = max(rank1, s[1] / s[0])
        inv = max(inv, float(np.max(np.abs(S @ forms.inverse(S) - np.eye(m)))) * min(1.0, abs(d) / _hadamard(S) * 1e3))
    return [
        at_most("adj(a) a = det(a) I, relative", adj, 1e-11),
        holds("inertia invariant under congruence", syl_ok),
        at_most("rank m-1 forms: sigma2/sigma1 of adjugate", rank1, 1e-9),
        at_most("a inverse(a) = I (well-conditioned part)", inv, 1e-10),
    ]


@_criterion(102, "level-set engine identities on random fields")
def invariant_properties(rng):
    pool = _equivariance_pool()
    worst = dict(transversal=0.0, sffsff=0.0, q=0.0, detm=0.0, kernel=0.0, routes=0.0, align=0.0, vol=0.0,
                 uniq=0.0, rankdrop=0.0)
    q_points = 0
    for _ in range(150):
        fld = pool[rng.integers(len(pool))]
        # identities below are compared at machine-precision tolerances, so
        # points are kept away from the degenerate locus
        pts = _nondegenerate_points(fld, rng, 1, min_rcond=1e-4)
        if not pts:
            continue
        p = pts[0]
        rep = invariants.analyze(fld, p)
        n = rep.n
        a = abs(rep.Ucal) ** (1 / (n + 2))
        # a dot product is accurate relative to |dF| |nm|, not to its value
        dot_size = max(a, float(np.linalg.norm(rep.dF) * np.linalg.norm(rep.nm)))
        worst["transversal"] = max(worst["transversal"], abs(rep.dF @ rep.nm + a) / dot_size)
        lhs = rep.k_inv @ rep.k
        rhs = np.eye(n + 1) - np.outer(rep.N, rep.dF) / rep.Ucal
        size = float(np.max(np.abs(rep.k_inv))) * float(np.max(np.abs(rep.k)))
        worst["sffsff"] = max(worst["sffsff"], float(np.max(np.abs(lhs - rhs))) / max(1.0, size))
        # the m_q route loses about cond(m_q) digits; compare where it is well posed
        if np.linalg.cond(rep.sff + np.outer(rep.dF, rep.dF) / rep.Ucal) <= 1e4:
            one = invariants._sff_inverse(rep.sff, rep.dF, rep.N, rep.Ucal, 1.0)
            alt = invariants._sff_inverse(rep.sff, rep.dF, rep.N, rep.Ucal, 7.3)
            worst["q"] = max(worst["q"], float(np.max(np.abs(alt - one))) / np.max(np.abs(one)))
            q_points += 1
        for q in (1.0, 7.3):
            mq = rep.sff + (q / rep.Ucal) * np.outer(rep.dF, rep.dF)
            worst["detm"] = max(worst["detm"], abs(forms.determinant(mq) - q) / max(1.0, _hadamard(mq)))
        worst["kernel"] = max(worst["kernel"], float(np.max(np.abs(rep.S @ rep.dF))) /
                              max(1.0, np.max(np.abs(rep.S))) / max(1.0, np.linalg.norm(rep.dF)))
        worst["routes"] = max(worst["routes"], abs(rep.kappa_eq - rep.kappa_amc) / max(1.0, abs(rep.kappa_eq)))
        bl = invariants.blaschke_residuals(fld, p)
        worst["align"] = max(worst["align"], bl["alignment"] / max(1.0, bl["scale"]))
        worst["vol"] = max(worst["vol"], bl["volume"])
        worst["uniq"] = max(worst["uniq"], invariants.uniqueness_residual(rep) /
                            max(1.0, np.max(np.abs(rep.dnm))) / max(1.0, rep.dF @ rep.dF))
        if abs(rep.H) <= 1e-12:
            R = rep.U - np.outer(rep.N, rep.N) / rep.Ucal
            worst["rankdrop"] = max(worst["rankdrop"], float(np.linalg.norm(R)) / max(np.linalg.norm(rep.U), 1e-300))
    return [
        at_most("dF(nm) = -|Ucal|^(1/(n+2)) / |dF||nm|", worst["transversal"], 1e-10),
        at_most("k^ip k_pj = delta - N^i F_j / Ucal", worst["sffsff"], 1e-10),
        at_most("sff^ij independent of q (1 vs 7.3)", worst["q"], 1e-11, f"{q_points} points, cond(m_1) <= 1e4"),
        at_most("det m_q = q", worst["detm"], 1e-10),
        at_most("S(dF-dual) = 0", worst["kernel"], 1e-10),
        at_most("trace S / n vs divergence route", worst["routes"], 1e-8),
        at_most("normal alignment residual / |dnm||rho|", worst["align"], 1e-8),
        at_most("metric volume = induced volume", worst["vol"], 1e-10),
        at_most("F_p F_[i d_j] nm^p = 0", worst["uniq"], 1e-10),
        at_most("rank-drop identity where H = 0", worst["rankdrop"], 1e-9),
    ]


@_criterion(103, "ruled constructions: calibration, parameterization, contact structure")
def ruled_properties(rng):
    checks = []
    hel = ruled.wronskian_pair("sin(t)", "cos(t)")
    exp_pair = ruled.wronskian_pair("exp(-t)", "-exp(t)")
    poly = ruled.wronskian_pair("t", "t^2")
    checks += [
        at_most("(sin, cos): |kappa + 1|", abs(hel.calibration.kappa + 1), 1e-12),
        at_most("(e^-t, -e^t): ||kappa| - 2|", abs(abs(exp_pair.calibration.kappa) - 2), 1e-12,
                f"measured kappa = {exp_pair.calibration.kappa:+.1f}"),
        holds("(t, t^2): non-constant Wronskian reported", not poly.calibration.calibrated),
        holds("spherical polar: non-constant determinant reported",
              not ruled.spherical_polar().calibration.calibrated),
    ]
    ah = ruled.ahelic()
    checks.append(at_most("ahelic: ||kappa| - 1|", abs(abs(ah.calibration.kappa) - 1), 1e-10))
    checks.append(at_most("ahelic: calibration deviation", ah.calibration.max_dev, 1e-10))
    gs = ruled.graph_style_immersion("(x1^2 + x2^2)^(1/2)", 1.5)
    checks.append(at_most("graph-style: |kappa - kappa0|", abs(gs.calibration.kappa - 1.5), 1e-10))
    for label, rf in {"helicoid": ruled.helicoid_ruled(), "genhel": ruled.genhel_ruled("x1*x2")}.items():
        pts = rf.sample(rng, 50)
        c = ruled.contact_symplectic_check(rf, pts)
        s = ruled.ruled_invariant_suite(rf, pts)
        level = 0.0
        for _ in range(100):
            t = rng.uniform(-2, 2)
            r = rf.base.sample(rng, 1)[0]
            sv = rng.uniform(-2, 2, rf.n)
            level = max(level, abs(rf.field.value(ruled.level_parameterization(rf, t, r, sv)) - t))
        checks += [
            at_most(f"{label}: beta ^ (d beta)^n vs (-1)^(n(n+1)/2) n! kappa", c["wedge"], 1e-9),
            at_most(f"{label}: Reeb beta(V) = kappa", c["reeb_beta"], 1e-9),
            at_most(f"{label}: Reeb d beta(V, .) = 0", c["reeb_omega"], 1e-9),
            holds(f"{label}: d beta nondegenerate on level sets", c["contact"]),
            at_most(f"{label}: Hess V = 0 (relative)", s["radical"], 1e-10),
            at_most(f"{label}: adj Hess = (-1)^n V V", s["adjugate"], 1e-9),
            at_most(f"{label}: Ucal = (-1)^n kappa^2", s["U_squared"], 1e-10),
            at_most(f"{label}: k(T_I, T_J) = 0", s["isotropy"], 1e-10),
            at_most(f"{label}: nm = -sign(kappa)|kappa|^(-2n/(2n+2)) V", s["normal"], 1e-9),
            holds(f"{label}: Hessian nullity one", s["hessian_nullity_one"]),
            at_most(f"{label}: F(Phi(t, r, s)) = t", level, 1e-10),
        ]
    gsr = ruled.build_ruled_field(ruled.graph_style_immersion("(x1^2 + x2^2)^(1/2)", 1.0))
    pts = gsr.sample(rng, 200)
    pts = pts[np.linalg.norm(pts[:, :2], axis=1) > 0.2][:50]
    s = ruled.ruled_invariant_suite(gsr, pts)
    checks += [
        at_most("graph-style 5-dim: |kappa_eq|", s["kappa_eq"], 1e-8),
        at_most("graph-style 5-dim: |S^2|", s["S2"], 1e-9),
        holds("graph-style 5-dim: split metric", s["inertia_split"]),
    ]
    return checks


@_criterion(104, "flow: reversal, monotonicity, truncation")
def flow_properties(rng):
    sd = builtin("symdet", 2)
    E0 = symdet_idempotent(2, 0)
    tr = flow.integrate(sd, E0, 0.5, 100)
    back = flow.integrate(sd, tr.end, 0.5, 100, reverse=True)
    rf = ruled.genhel_ruled("x1*x2")
    s = rf.sample(rng, 1, box=1.0)[0]
    g1 = flow.integrate(rf.field, s, 1.0, 100)
    g2 = flow.integrate(rf.field, g1.end, 1.0, 100, reverse=True)
    _, _, Fs = tr.as_arrays()
    # nm drives x1 to the boundary x1 = 0 of the domain of log in finite time
    past = flow.integrate(builtin("graph", "x2^2/2 - log(x1)"), [0.25, 0.3, 0.0], 3.0, 30)
    return [
        at_most("symdet(2): forward then backward returns to start", np.max(np.abs(back.end - E0)), 1e-7),
        at_most("genhel: forward then backward returns to start", np.max(np.abs(g2.end - s)), 1e-7),
        holds("symdet(2): F strictly decreasing along nm", bool(np.all(np.diff(Fs) < 0))),
        holds("flow into a domain boundary is truncated with a reason",
              past.reason != flow.COMPLETED and len(past.times) < 31, past.reason),
    ]


SUITES = {
    "identities": (5, 13, 101, 102),
    "examples": (1, 3, 4, 6, 7, 8, 9, 11),
    "ruled": (2, 10, 103),
    "flow": (12, 104),
}
SUITES["all"] = tuple(sorted({k for v in SUITES.values() for k in v}))

_EXTRA = {f.number: f for f in (forms_properties, invariant_properties, ruled_properties, flow_properties)}


def get(number):
    try:
        return CRITERIA.get(number) or _EXTRA[number]
    except KeyError:
        raise KeyError(f"no criterion {number}") from None


def run_suite(name, seed=0, out=None):
    """Run every campaign of suite ``name``; return the list of results."""
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    results = []
    for number in SUITES[name]:
        res = get(number)(seed)
        results.append(res)
        if out is not None:
            print(res.table(), file=out, flush=True)
    return results
