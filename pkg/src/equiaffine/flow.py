"""Affine normal flow: fixed-step RK4 on the equiaffine normal field.

Trajectories stop early, with a reason code, when a stage evaluation lands
on a degenerate level set, a critical point, or outside the field's domain.
Ruled fields also have a closed-form flow, used as an oracle.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import invariants, ruled
from .errors import ArgumentError, CriticalPointError, DegenerateError, DomainError

COMPLETED = "completed"
DEGENERATE = "degenerate"
CRITICAL = "critical"
DOMAIN = "domain"

# relative size below which step-halving differences count as rounding noise
ROUNDOFF = 1e-13


class _Stop(Exception):
    def __init__(self, reason, detail):
        super().__init__(detail)
        self.reason = reason


@dataclass
class Trajectory:
    times: list
    points: list
    F_values: list
    step_stats: dict = dc_field(default_factory=dict)
    reason: str = COMPLETED
    detail: str = ""
    var_names: tuple = ()

    @property
    def completed(self):
        return self.reason == COMPLETED

    @property
    def end(self):
        return np.asarray(self.points[-1])

    def as_arrays(self):
        return np.asarray(self.times), np.asarray(self.points), np.asarray(self.F_values)

    def to_dict(self):
        return {
            "times": [float(t) for t in self.times],
            "points": [[float(x) for x in p] for p in self.points],
            "F_values": [float(f) for f in self.F_values],
            "step_stats": self.step_stats,
            "reason": self.reason,
            "detail": self.detail,
            "var_names": list(self.var_names),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.var_names) or [f"x{i + 1}" for i in range(len(self.points[0]))]
        w.writerow(["t", *names, "F"])
        for t, p, f in zip(self.times, self.points, self.F_values):
            w.writerow([repr(float(t)), *(repr(float(x)) for x in p), repr(float(f))])
        return buf.getvalue()


def _velocity(fld, x, sign, tol_nondegen):
    try:
        out = invariants.normal_vector(fld, x, tol_nondegen)
    except DegenerateError as exc:
        raise _Stop(DEGENERATE, str(exc)) from exc
    except CriticalPointError as exc:
        raise _Stop(CRITICAL, str(exc)) from exc
    except (DomainError, OverflowError, ZeroDivisionError) as exc:
        raise _Stop(DOMAIN, str(exc)) from exc
    if float(np.linalg.norm(out["dF"])) <= invariants.TOL_REGULAR * max(1.0, float(np.max(np.abs(x)))):
        raise _Stop(CRITICAL, f"dF vanishes at {x.tolist()}")
    v = sign * np.asarray(out["nm"], dtype=float)
    if not np.all(np.isfinite(v)):
        raise _Stop(DOMAIN, f"normal is not finite at {x.tolist()}")
    return v


def _rk4_step(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(fld, start, t_end, steps, *, reverse=False, error_estimate=True,
              tol_nondegen=invariants.TOL_NONDEGEN):
    """Integrate dx/dt = nm(x) (or -nm with ``reverse``) from ``start`` over [0, t_end].

    The start point must be regular and nondegenerate; otherwise the
    corresponding error is raised.  Later failures truncate the trajectory
    and set ``reason``.  With ``error_estimate`` each step is repeated as two
    half steps and the largest difference is kept in ``step_stats``.
    """
    if isinstance(steps, bool) or int(steps) != steps or steps < 1:
        raise ArgumentError(f"steps must be a positive integer, got {steps!r}")
    if not (math.isfinite(t_end) and t_end >= 0):
        raise ArgumentError(f"t_end must be finite and nonnegative, got {t_end!r}")
    steps = int(steps)
    x = np.asarray(start, dtype=float).ravel().copy()
    if x.size != fld.dim:
        raise ArgumentError(f"start has {x.size} coordinates, field expects {fld.dim}")
    rep = invariants.analyze(fld, x, tol_nondegen=tol_nondegen)
    if not rep.nondegenerate:
        raise DegenerateError(f"U(F) = {rep.Ucal:.3e} vanishes at the start point")
    sign = -1.0 if reverse else 1.0

    def f(y):
        return _velocity(fld, y, sign, tol_nondegen)

    traj = Trajectory([0.0], [x.copy()], [float(rep.F)], var_names=tuple(fld.var_names))
    max_err = 0.0
    if t_end == 0:
        traj.step_stats = {"steps": 0, "h": 0.0, "max_step_error": 0.0}
        return traj
    h = t_end / steps
    for i in range(steps):
        try:
            y = _rk4_step(f, x, h)
            if error_estimate:
                z = _rk4_step(f, _rk4_step(f, x, 0.5 * h), 0.5 * h)
                max_err = max(max_err, float(np.max(np.abs(y - z))))
            Fy = fld.value(y)
        except _Stop as stop:
            traj.reason, traj.detail = stop.reason, str(stop)
            break
        except DomainError as exc:
            traj.reason, traj.detail = DOMAIN, str(exc)
            break
        x = y
        traj.times.append((i + 1) * h)
        traj.points.append(x.copy())
        traj.F_values.append(float(Fy))
    traj.step_stats = {"steps": len(traj.times) - 1, "h": h,
                       "max_step_error": max_err if error_estimate else None}
    return traj


# closed-form flow of a ruled field

def flow_rate(rf):
    """|Ucal|^{1/(hd+2)} = |kappa|^{2/(hd+2)}, the speed at which F drops along nm."""
    hd = 2 * rf.n
    return abs(rf.kappa) ** (2.0 / (hd + 2))


def exact_ruled_flow(rf, t, r, s, level=0.0):
    """Point at time t of the flow through Phi(level, r, s)."""
    return ruled.level_parameterization(rf, level - flow_rate(rf) * t, r, s)


def exact_trajectory(rf, start, times):
    t0, r, s = ruled.ruled_coordinates(rf, np.asarray(start, dtype=float))
    return np.array([exact_ruled_flow(rf, t, r, s, level=t0) for t in times])


def compare_exact(rf, start, t_end=1.0, steps=100):
    """Sup-norm gap between RK4 and the closed-form flow over [0, t_end]."""
    traj = integrate(rf.field, start, t_end, steps, error_estimate=False)
    times, pts, _ = traj.as_arrays()
    exact = exact_trajectory(rf, start, times)
    return {"max_error": float(np.max(np.abs(pts - exact))), "reason": traj.reason,
            "steps": len(times) - 1}


def _sup_gap(a, b):
    # coarse nodes against the matching nodes of a twice-finer grid
    return float(np.max(np.abs(a - b[::2])))


def convergence_order(fld, start, t_end, steps, exact=None):
    """Observed order from runs with steps, 2*steps, 4*steps.

    With an exact solution (callable on a time array) the errors are measured
    against it; otherwise successive differences are used.  When every error
    sits at rounding level the integrator reproduces the flow exactly and
    the order is reported as infinite with ``exact_to_roundoff`` set.
    """
    runs = []
    for k in (1, 2, 4):
        tr = integrate(fld, start, t_end, steps * k, error_estimate=False)
        if not tr.completed:
            return {"order": None, "errors": [], "exact_to_roundoff": False, "reason": tr.reason}
        runs.append((np.asarray(tr.times), np.asarray(tr.points)))
    scale = max(1.0, float(np.max(np.abs(runs[-1][1]))))
    if exact is not None:
        errs = [float(np.max(np.abs(pts - exact(times)))) for times, pts in runs]
        e1, e2 = errs[0], errs[1]
    else:
        errs = [_sup_gap(runs[0][1], runs[1][1]), _sup_gap(runs[1][1], runs[2][1])]
        e1, e2 = errs
    floor = ROUNDOFF * scale * max(1.0, abs(t_end)) * steps
    if max(errs) <= floor:
        return {"order": math.inf, "errors": errs, "exact_to_roundoff": True, "reason": COMPLETED}
    if e2 <= 0 or e1 <= 0:
        return {"order": None, "errors": errs, "exact_to_roundoff": False, "reason": COMPLETED}
    return {"order": math.log2(e1 / e2), "errors": errs, "exact_to_roundoff": False, "reason": COMPLETED}


def linearity_residual(fld, traj, ucal_tol=1e-9):
    """max |F(phi(t)) - F(start) + |Ucal|^{1/(n+2)} t| if Ucal is constant on the path, else None."""
    times, pts, Fs = traj.as_arrays()
    n = fld.dim - 1
    ucals = np.array([invariants.u_invariant(fld, p)[0] for p in pts])
    spread = float(np.max(np.abs(ucals - ucals[0]))) / max(abs(ucals[0]), 1e-300)
    if spread > ucal_tol:
        return None, spread
    rate = abs(ucals[0]) ** (1.0 / (n + 2))
    return float(np.max(np.abs(Fs - Fs[0] + rate * times))), spread


def flow_report(fld, starts, t_end, steps, order_steps=None, exact=None):
    """Per-start linearity residual, monotonicity of F and step-halving order.

    ``exact`` optionally maps a start point to a callable giving the exact
    flow on a time array (see :func:`exact_trajectory`).
    """
    rows = []
    for start in np.atleast_2d(np.asarray(starts, dtype=float)):
        traj = integrate(fld, start, t_end, steps)
        _, _, Fs = traj.as_arrays()
        resid, spread = linearity_residual(fld, traj)
        diffs = np.diff(Fs)
        row = {
            "start": start.tolist(),
            "reason": traj.reason,
            "nodes": len(traj.times),
            "F_start": float(Fs[0]),
            "F_end": float(Fs[-1]),
            "linearity_residual": resid,
            "ucal_spread": spread,
            "F_monotone": bool(np.all(diffs < 0) or np.all(diffs > 0)) if len(diffs) else True,
            "max_step_error": traj.step_stats.get("max_step_error"),
        }
        if traj.completed and t_end > 0:
            ex = exact(start) if exact is not None else None
            row.update(convergence_order(fld, start, t_end, order_steps or max(4, steps // 4), ex))
            if ex is not None:
                times, pts, _ = traj.as_arrays()
                row["exact_error"] = float(np.max(np.abs(pts - ex(times))))
        rows.append(row)
    finite = [r["order"] for r in rows if r.get("order") is not None]
    resids = [r["linearity_residual"] for r in rows if r["linearity_residual"] is not None]
    return {
        "rows": rows,
        "max_linearity_residual": max(resids) if resids else None,
        "min_order": min(finite) if finite else None,
        "all_completed": all(r["reason"] == COMPLETED for r in rows),
    }


def ruled_exact(rf):
    """Adapter for :func:`flow_report`: start -> exact flow callable."""
    def make(start):
        return lambda times: exact_trajectory(rf, start, times)
    return make
