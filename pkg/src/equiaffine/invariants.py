"""Pointwise equiaffine invariants of the level sets of a scalar field.

Conventions: the ambient space is R^m with m = n + 1, F_i and F_ij are
ordinary partial derivatives in equiaffine coordinates, ``U`` is the adjugate
of the Hessian, ``Ucal = U^{ij} F_i F_j`` and ``N = U dF``.  The shape
operator is stored as ``S[i, j] = S_i^j`` with ``i`` the derivative slot.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import exprlang, forms, jets
from .errors import ArgumentError, CriticalPointError, DegenerateError
from .exprlang import FieldSpec
from .forms import Inertia

TOL_REGULAR = 1e-12
TOL_NONDEGEN = 1e-10


# generic pipeline

def normal_pipeline(dF, hess, third):
    """Normal data from (dF, Hess, third derivatives) over any smooth scalar.

    Built on the inverse of the bordered Hessian B = [[Hess, dF], [dF^T, 0]],
    whose blocks are sff^{ij}, N / Ucal and -H / Ucal; ``mu`` follows from
    Jacobi's formula d log det B = tr(B^{-1} dB).  Entries may be floats or
    order-1 jets; in the latter case every output carries its gradient.
    """
    dF = np.asarray(dF)
    hess = np.asarray(hess)
    third = np.asarray(third)
    m = len(dF)
    n = m - 1
    B = forms.bordered_matrix(hess, dF)
    if B.dtype == object:
        det, solve = forms.lu_factor_generic(B)
        eye = np.eye(m + 1)
        Binv = np.column_stack([solve(np.array(list(eye[:, j]), dtype=object)) for j in range(m + 1)])
        X = Binv[:m, :m]
        mu = np.array([np.sum(X * third[:, :, k]) for k in range(m)], dtype=object)
        y = Binv[:m, m]
        mu = np.array([(mu[k] + 2 * np.dot(y, hess[:, k])) / (n + 2) for k in range(m)], dtype=object)
    else:
        det = np.linalg.det(B)
        Binv = np.linalg.inv(B)
        X = Binv[:m, :m]
        y = Binv[:m, m]
        mu = (np.einsum("ab,abk->k", X, third) + 2 * y @ hess) / (n + 2)
    Ucal = -det
    H = -Ucal * Binv[m, m]
    N = y * Ucal
    a = jets.pow_real(jets.abs_(Ucal), 1.0 / (n + 2))
    w = (X @ mu) * a
    nm = -(y * a) - w
    return {"Ucal": Ucal, "H": H, "N": N, "sff_inv": X, "mu": mu, "k_inv_mu": w, "nm": nm, "a": a}


def _lifted(J):
    """Order-1 jets of (dF, Hess, third derivatives) read from an order-4 jet."""
    g, h, t3, t4 = (J.derivative_tensor(k) for k in (1, 2, 3, 4))
    return jets.lift(g, h), jets.lift(h, t3), jets.lift(t3, t4)


# report

@dataclass
class InvariantReport:
    point: np.ndarray
    F: float
    dF: np.ndarray
    hess: np.ndarray
    H: float
    U: np.ndarray
    Ucal: float
    N: np.ndarray
    gauss_kronecker: float
    flags: dict
    sff: Optional[np.ndarray] = None
    sff_inv: Optional[np.ndarray] = None
    k: Optional[np.ndarray] = None
    k_inv: Optional[np.ndarray] = None
    inertia_k: Optional[Inertia] = None
    rho: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    nm: Optional[np.ndarray] = None
    dnm: Optional[np.ndarray] = None  # dnm[j, i] = d_j nm^i
    S: Optional[np.ndarray] = None
    kappa_eq: Optional[float] = None
    kappa_amc: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def m(self):
        return len(self.point)

    @property
    def n(self):
        return len(self.point) - 1

    @property
    def nondegenerate(self):
        return self.flags["nondegenerate"]

    def require(self, name):
        value = getattr(self, name)
        if value is None:
            if not self.nondegenerate:
                raise DegenerateError(f"U(F) = {self.Ucal:.3e} vanishes; {name} is undefined")
            raise ArgumentError(f"{name} needs a higher jet order than the field provides")
        return value

    def tangent_basis(self):
        return forms.kernel_basis(self.dF)

    def shape_operator_tangent(self):
        """Matrix of S on an orthonormal basis of the tangent space."""
        E = self.tangent_basis()
        return E.T @ self.require("S").T @ E

    def to_dict(self):
        def arr(x):
            return None if x is None else np.asarray(x, dtype=float).tolist()

        def num(x):
            return None if x is None else float(x)

        return {
            "point": arr(self.point),
            "F": num(self.F),
            "dF": arr(self.dF),
            "H": num(self.H),
            "Ucal": num(self.Ucal),
            "N": arr(self.N),
            "k": arr(self.k),
            "k_inertia": None if self.inertia_k is None else list(self.inertia_k),
            "mu": arr(self.mu),
            "nm": arr(self.nm),
            "rho": arr(self.rho),
            "S": arr(self.S),
            "kappa_eq": num(self.kappa_eq),
            "gauss_kronecker": num(self.gauss_kronecker),
            "flags": dict(self.flags),
            "diagnostics": {k: (arr(v) if isinstance(v, np.ndarray) else v) for k, v in self.diagnostics.items()},
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _ucal_scale(dF, hess):
    m = len(dF)
    return float(dF @ dF) * float(np.max(np.abs(hess))) ** (m - 1)


def nondegenerate_at(dF, hess, tol=TOL_NONDEGEN):
    """Relative test for U(F) != 0: the bordered Hessian must be numerically invertible.

    |U(F)| is the product of the singular values of the bordered matrix, so
    the scale-free question is whether the smallest of them is above tol
    times the largest.
    """
    s = np.linalg.svd(forms.bordered_matrix(np.asarray(hess, float), np.asarray(dF, float)), compute_uv=False)
    return bool(s[0] > 0 and s[-1] > tol * s[0])


def analyze(fld: FieldSpec, point, tol_regular=TOL_REGULAR, tol_nondegen=TOL_NONDEGEN):
    """Every pointwise invariant of the level set of ``fld`` through ``point``."""
    point = np.asarray(point, dtype=float).ravel()
    order = min(jets.MAX_ORDER, fld.max_order)
    J = fld.jet(point, order)
    m = len(point)
    n = m - 1
    dF = J.gradient()
    hess = J.hessian()
    norm = float(np.linalg.norm(dF))
    if norm <= tol_regular * max(1.0, float(np.max(np.abs(point)))):
        raise CriticalPointError(f"dF vanishes at {point.tolist()}")
    H = forms.determinant(hess)
    U = forms.adjugate(hess)
    Ucal = forms.bordered_determinant(hess, dF)
    N = U @ dF
    nondeg = nondegenerate_at(dF, hess, tol_nondegen)
    flags = {
        "regular_point": True,
        "nondegenerate": nondeg,
        "Ucal_sign": int(np.sign(Ucal)) if nondeg else 0,
        "jet_order": order,
    }
    rep = InvariantReport(
        point=point, F=J.value, dF=dF, hess=hess, H=H, U=U, Ucal=Ucal, N=N,
        gauss_kronecker=Ucal / norm ** (n + 2), flags=flags,
    )
    if not nondeg:
        return rep

    FF = np.outer(dF, dF)
    rep.sff = hess - (H / Ucal) * FF
    rep.sff_inv = _sff_inverse(rep.sff, dF, N, Ucal, q=balanced_q(rep.sff, dF, Ucal))
    a = abs(Ucal) ** (1.0 / (n + 2))
    rep.k = rep.sff / a
    rep.k_inv = a * rep.sff_inv
    rep.rho = -dF / a
    rep.inertia_k = forms.inertia(forms.restrict(rep.k, rep.tangent_basis()))
    if order < 3:
        return rep

    if order >= 4:
        out = normal_pipeline(*_lifted(J))
        mu = jets.constant_parts(out["mu"])
        dnm = jets.gradients(out["nm"]).T
        div = float(np.trace(jets.gradients(out["k_inv_mu"])))
        pipe = {k: jets.constant_parts(out[k]) if isinstance(out[k], np.ndarray) else jets.constant_part(out[k])
                for k in ("Ucal", "H", "N", "sff_inv", "nm")}
    else:
        out = normal_pipeline(dF, hess, J.derivative_tensor(3))
        mu = out["mu"]
        dnm = div = None
        pipe = out
    rep.mu = mu
    rep.nm = -(a / Ucal) * N - rep.k_inv @ mu
    rep.diagnostics["route_mismatch"] = _route_mismatch(rep, pipe)
    if dnm is None:
        return rep

    rep.dnm = dnm
    c = (N @ mu - H) / Ucal
    rep.S = -dnm + c * np.outer(dF, rep.nm)
    rep.kappa_eq = float(np.trace(rep.S)) / n
    rep.kappa_amc = (div + (n + 2) * a / Ucal * (H - N @ mu)) / n
    rep.diagnostics["kappa_eq_amc"] = rep.kappa_amc
    rep.diagnostics["divergence"] = div
    return rep


def balanced_q(sff, dF, Ucal):
    """q for which (q/Ucal) dF dF^T has the size of sff.

    Any q != 0 gives the same inverse in exact arithmetic; q = 1 makes m_q
    badly conditioned when |Ucal| is small against |dF|^2 |sff|.
    """
    size = float(np.max(np.abs(sff))) / float(dF @ dF)
    return Ucal * size if size > 0 and np.isfinite(size) else 1.0


def _sff_inverse(sff, dF, N, Ucal, q):
    # m_q is invertible exactly when Ucal != 0, which the caller has checked
    m_form = sff + (q / Ucal) * np.outer(dF, dF)
    return np.linalg.inv(m_form) - np.outer(N, N) / (q * Ucal)


def _route_mismatch(rep, pipe):
    """Largest relative gap between the cofactor route and the bordered-inverse route."""
    def rel(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return float(np.max(np.abs(x - y)) / max(np.max(np.abs(x)), np.max(np.abs(y)), 1e-300))

    hs = float(np.max(np.abs(rep.hess))) ** rep.m
    return max(
        rel(rep.Ucal, pipe["Ucal"]),
        abs(rep.H - float(pipe["H"])) / max(abs(rep.H), hs, 1e-300),
        rel(rep.N, pipe["N"]),
        rel(rep.sff_inv, pipe["sff_inv"]),
        rel(rep.nm, pipe["nm"]),
    )


# lighter entry points

def hessian_determinant(fld, point):
    return forms.determinant(fld.jet(point, 2).hessian())


def u_invariant(fld, point):
    """(Ucal, N, U) with Ucal from the bordered determinant."""
    J = fld.jet(point, 2)
    dF, hess = J.gradient(), J.hessian()
    U = forms.adjugate(hess)
    Ucal = forms.bordered_determinant(hess, dF)
    N = U @ dF
    scale = max(_ucal_scale(dF, hess), 1e-300)
    if abs(Ucal - dF @ N) > 1e-10 * scale:
        raise ArithmeticError(f"U(F) routes disagree: {Ucal!r} vs {float(dF @ N)!r}")
    return Ucal, N, U


def normal_vector(fld, point, tol_nondegen=TOL_NONDEGEN):
    """The equiaffine normal alone (order-3 jet, bordered-inverse route)."""
    J = fld.jet(point, 3)
    dF, hess = J.gradient(), J.hessian()
    if not nondegenerate_at(dF, hess, tol_nondegen):
        Ucal = forms.bordered_determinant(hess, dF)
        raise DegenerateError(f"U(F) = {Ucal:.3e} vanishes at {np.asarray(point).tolist()}")
    out = normal_pipeline(dF, hess, J.derivative_tensor(3))
    out["F"] = J.value
    out["dF"] = dF
    out["hess"] = hess
    return out


def homogeneity_check(fld, point, lam):
    """Residuals of (lam-1) Ucal = lam H F and (lam-1) N = H * Euler."""
    point = np.asarray(point, dtype=float)
    J = fld.jet(point, 2)
    hess, dF = J.hessian(), J.gradient()
    H = forms.determinant(hess)
    N = forms.adjugate(hess) @ dF
    Ucal = dF @ N
    r1 = abs((lam - 1) * Ucal - lam * H * J.value)
    r2 = float(np.max(np.abs((lam - 1) * N - H * point)))
    return r1, r2


# equivariance

def _rel(x, y, floor):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    den = max(float(np.max(np.abs(x))), float(np.max(np.abs(y))), floor, 1e-300)
    return float(np.max(np.abs(x - y))) / den


def _core(fld, point):
    J = fld.jet(point, 3)
    dF, hess = J.gradient(), J.hessian()
    H = forms.determinant(hess)
    Ucal = forms.bordered_determinant(hess, dF)
    N = forms.adjugate(hess) @ dF
    out = {"F": J.value, "dF": dF, "hess": hess, "H": H, "Ucal": Ucal, "N": N,
           "scaleH": float(np.max(np.abs(hess))) ** len(dF), "scaleU": _ucal_scale(dF, hess)}
    if nondegenerate_at(dF, hess):
        out["nm"] = normal_pipeline(dF, hess, J.derivative_tensor(3))["nm"]
    return out


def compose_psi(fld, psi):
    """The field psi o F for a one-variable expression psi(t)."""
    node = exprlang.parse(psi, 1, ["t"]) if isinstance(psi, str) else psi
    f = exprlang.compile_ast(node)
    inner = fld.fn
    return FieldSpec(
        dim=fld.dim, var_names=fld.var_names, fn=lambda xs: f([inner(xs)]),
        source=f"psi o ({fld.source})", tag="reparam", params=(exprlang.to_string(node),),
    )


def reparam_transform(fld, psi, point):
    """Compare invariants of F and psi o F at ``point``."""
    node = exprlang.parse(psi, 1, ["t"]) if isinstance(psi, str) else psi
    a = _core(fld, point)
    b = _core(compose_psi(fld, node), point)
    pj = exprlang.compile_ast(node)([jets.seed([a["F"]], 0, 2)])
    if not isinstance(pj, jets.Jet):
        raise ArgumentError("psi is constant")
    d1, d2 = jets.extract(pj, (1,)), jets.extract(pj, (2,))
    if d1 == 0:
        raise ArgumentError("psi is stationary at F(point)")
    n = len(point) - 1
    rhs_U = d1 ** (n + 2) * a["Ucal"]
    rhs_H = d1 ** (n + 1) * (a["H"] + d2 / d1 * a["Ucal"])
    rhs_N = d1 ** (n + 1) * a["N"]
    rec = {
        "psi_prime": d1, "psi_second": d2, "F": a, "psiF": b,
        "res_U": _rel(b["Ucal"], rhs_U, b["scaleU"]),
        "res_H": _rel(b["H"], rhs_H, b["scaleH"]),
        "res_N": _rel(b["N"], rhs_N, 0.0),
    }
    if "nm" in a and "nm" in b:
        rec["res_nm"] = _rel(b["nm"], math.copysign(1.0, d1) * a["nm"], 0.0)
    return rec


def affine_field(fld, L, b):
    """(g.F)(x) = F(g^{-1} x) for g x = L x + b."""
    L = np.asarray(L, float)
    b = np.asarray(b, float)
    if abs(np.linalg.det(L)) < 1e-14 * max(1.0, np.max(np.abs(L))) ** len(L):
        raise ArgumentError("affine map is singular")
    Linv = np.linalg.inv(L)
    inner = fld.fn

    def fn(xs):
        shifted = [x - c for x, c in zip(xs, b)]
        return inner([sum(Linv[i, j] * shifted[j] for j in range(len(b))) for i in range(len(b))])

    return FieldSpec(dim=fld.dim, var_names=fld.var_names, fn=fn, source=f"g.({fld.source})", tag="affine")


def projective_map(A, b, c, d):
    A, b, c = (np.asarray(v, float) for v in (A, b, c))

    def phi(xs):
        den = sum(c[j] * xs[j] for j in range(len(xs))) + d
        if jets.constant_part(den) == 0:
            raise ArgumentError("fractional-linear denominator vanishes")
        return [(sum(A[i, j] * xs[j] for j in range(len(xs))) + b[i]) / den for i in range(len(xs))]

    return phi


def affine_transform(fld, g, point, projective=None):
    """Residuals of the affine (and optional projective) transformation rules.

    ``g`` is a pair (L, b); ``projective`` an optional tuple (A, b, c, d)
    describing Phi(x) = (A x + b) / (c.x + d).
    """
    point = np.asarray(point, dtype=float)
    L, b = (np.asarray(v, float) for v in g)
    n = len(point) - 1
    gF = affine_field(fld, L, b)
    y = np.linalg.solve(L, point - b)
    base = _core(fld, y)
    moved = _core(gF, point)
    det2 = np.linalg.det(L) ** 2
    rec = {
        "det_l": float(np.linalg.det(L)),
        "res_H": _rel(base["H"], det2 * moved["H"], base["scaleH"]),
        "res_U": _rel(base["Ucal"], det2 * moved["Ucal"], base["scaleU"]),
    }
    if "nm" in base and "nm" in moved:
        scale = abs(np.linalg.det(L)) ** (2.0 / (n + 2))
        rec["res_nm"] = _rel(L @ base["nm"], scale * moved["nm"], 0.0)
    if projective is not None:
        phi = projective_map(*projective)
        inner = fld.fn
        pulled = FieldSpec(dim=fld.dim, var_names=fld.var_names, fn=lambda xs: inner(phi(xs)), tag="projective")
        x_jets = jets.seed_all(point, 1)
        comps = phi(x_jets)
        T = np.array([c.gradient() for c in comps])
        img = np.array([c.value for c in comps])
        pb = u_invariant(pulled, point)[0]
        at = _core(fld, img)
        rhs = np.linalg.det(T) ** 2 * at["Ucal"]
        J = pulled.jet(point, 2)
        rec["res_proj"] = _rel(pb, rhs, _ucal_scale(J.gradient(), J.hessian()))
        rec["det_TPhi"] = float(np.linalg.det(T))
    return rec


# derived fields and tests

@dataclass(frozen=True)
class JetField(FieldSpec):
    """A field available only through its jets (e.g. built from derivatives of another)."""

    jet_fn: Optional[object] = field(default=None, compare=False, repr=False)

    def jet(self, point, order):
        if order > self.max_order:
            raise ArgumentError(f"field {self.label} supports jets up to order {self.max_order}")
        return self.jet_fn(np.asarray(point, dtype=float).ravel(), order)

    def value(self, point):
        return self.jet(point, 0).value


def ucal_jet(fld, point, order):
    """Jet of the function U(F) itself, from a jet of F two orders higher."""
    J = fld.jet(point, order + 2)
    m = J.dim
    first = [J.partial(i) for i in range(m)]
    dF = np.array([g.truncate(order) for g in first], dtype=object)
    hess = np.array([[first[i].partial(j) for j in range(m)] for i in range(m)], dtype=object)
    return forms.bordered_determinant(hess, dF), J


def reilly_normalize(fld, point, tol_nondegen=TOL_NONDEGEN):
    """G = |U(F)|^{-1/(n+2)} (F - F(point)), for which |U(G)| = 1 on that level set."""
    point = np.asarray(point, dtype=float)
    Ucal, _, _ = u_invariant(fld, point)
    J = fld.jet(point, 2)
    if not nondegenerate_at(J.gradient(), J.hessian(), tol_nondegen):
        raise DegenerateError(f"U(F) = {Ucal:.3e} vanishes at the base point")
    r = J.value
    n = fld.dim - 1

    def jet_fn(x, order):
        U, J = ucal_jet(fld, x, order)
        return jets.pow_real(jets.abs_(U), -1.0 / (n + 2)) * (J.truncate(order) - r)

    return JetField(
        dim=fld.dim, var_names=fld.var_names, fn=None,
        source=f"|U({fld.source})|^(-1/{n + 2})*(({fld.source}) - {r!r})",
        tag="reilly", params=(fld.label, r), max_order=jets.MAX_ORDER - 2, jet_fn=jet_fn,
    )


def level_flatness_test(fld, points, kappa_tol=1e-8):
    """Wedge mu ^ rho, parallelism of nm and N, and the flat-level curvature formula."""
    wedge = parallel = angle = kappa_gap = 0.0
    namc = []
    for p in points:
        rep = analyze(fld, p)
        rep.require("nm")
        n = rep.n
        W = np.outer(rep.mu, rep.rho)
        wedge = max(wedge, float(np.max(np.abs(W - W.T))))
        a = abs(rep.Ucal)
        pred = -np.sign(rep.Ucal) * a ** (-(n + 1) / (n + 2)) * rep.N
        parallel = max(parallel, float(np.max(np.abs(rep.nm - pred))))
        u = rep.nm / np.linalg.norm(rep.nm)
        v = rep.N / np.linalg.norm(rep.N)
        angle = max(angle, 2 * math.asin(min(1.0, min(np.linalg.norm(u - v), np.linalg.norm(u + v)) / 2)))
        k_flat = (n + 2) * np.sign(rep.Ucal) * a ** (-(n + 1) / (n + 2)) * (rep.H - rep.N @ rep.mu) / n
        namc.append(k_flat)
        kappa_gap = max(kappa_gap, abs(k_flat - rep.kappa_eq))
    return {
        "wedge": wedge,
        "parallel": parallel,
        "angle": angle,
        "kappa_flat": namc,
        "kappa_gap": kappa_gap,
        "flat_formula_holds": bool(kappa_gap <= kappa_tol),
    }


def graph_normal(f: FieldSpec, base, tol=TOL_NONDEGEN):
    """Closed-form equiaffine normal of the graph x_{m+1} = f(x_1..x_m) at (base, f(base)).

    nm = -|H(f)|^{1/(n+2)} (v - Z) where v = e_{m+1} and Z is the image of
    f^{IQ} d_Q log|H(f)|^{1/(n+2)} under w -> (w, df(w)).
    """
    base = np.asarray(base, dtype=float)
    J = f.jet(base, 3)
    n = f.dim
    hf = J.hessian()
    Hf = forms.determinant(hf)
    if not abs(Hf) > tol * max(float(np.max(np.abs(hf))), 1e-300) ** n:
        raise DegenerateError(f"H(f) = {Hf:.3e} vanishes at {base.tolist()}")
    finv = np.linalg.inv(hf)
    dlog = np.einsum("ij,ijq->q", finv, J.derivative_tensor(3))
    z = finv @ dlog / (n + 2)
    Z = np.append(z, J.gradient() @ z)
    v = np.zeros(n + 1)
    v[n] = 1.0
    return -abs(Hf) ** (1.0 / (n + 2)) * (v - Z)


def gauss_kronecker_direct(fld, point):
    """Gauss-Kronecker curvature of the level set via the Euclidean shape operator."""
    J = fld.jet(point, 2)
    dF, hess = J.gradient(), J.hessian()
    norm = float(np.linalg.norm(dF))
    if norm <= TOL_REGULAR * max(1.0, float(np.max(np.abs(point)))):
        raise CriticalPointError(f"dF vanishes at {np.asarray(point).tolist()}")
    E = -dF / norm
    FE = hess @ E
    Pi = (hess - np.outer(FE, E) - np.outer(E, FE) + (E @ FE) * np.outer(E, E)) / norm
    return forms.determinant(Pi + np.outer(E, E))


def blaschke_residuals(fld, point):
    """Numerical check of the classical characterization of the normal.

    With rho the conormal (rho(nm) = 1) the induced connection form is
    tau(X) = rho(D_X nm), and k^{PQ} nabla_I k_{PQ} = 2 tau_I + d_I log|vol|
    where vol = rho . adj(k) . rho is the ratio of the metric volume to the
    volume induced by nm.  Returns the tangential alignment residual
    n tau + k^{PQ} nabla k_{PQ} = (n+2) tau + d log|vol|, the size |dnm| |rho|
    of the factors that make up tau, and |vol| - 1.
    """
    J = fld.jet(point, 4)
    dF_j, hess_j, third_j = _lifted(J)
    out = normal_pipeline(dF_j, hess_j, third_j)
    m = J.dim
    n = m - 1
    a = out["a"]
    rho = dF_j * (-1.0 / a)
    # k = (Hess - (H/Ucal) dF dF^T)/a, but a multiple of dF dF^T never changes
    # a determinant bordered by dF; leaving it out avoids a large cancellation
    vol = forms.bordered_determinant(hess_j * (1.0 / a), rho)
    nm = out["nm"]
    dnm = jets.gradients(nm).T
    rho0 = jets.constant_parts(rho)
    E = forms.kernel_basis(J.gradient())
    tau = E.T @ (dnm @ rho0)
    dlogvol = E.T @ (vol.gradient() / vol.value)
    return {
        "alignment": float(np.max(np.abs((n + 2) * tau + dlogvol))),
        "tau": float(np.max(np.abs(tau))),
        "scale": float(np.max(np.abs(dnm)) * np.max(np.abs(rho0))),
        "volume": abs(abs(vol.value) - 1.0),
    }


def uniqueness_residual(rep):
    """Antisymmetric part of F_p F_i d_j nm^p."""
    g = rep.require("dnm") @ rep.dF
    C = np.outer(rep.dF, g)
    return float(np.max(np.abs(C - C.T)))
