"""Generalized Ricci flow, its gauge-fixed form and convergence experiments.

The evolved variables are ``(g, b)``; ``H = H0 + db`` is recomputed from
``b`` at every stage, so closedness and the class of ``H0`` are kept by
construction.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import functional as fn
from . import geometry as geo

HOMOGENEOUS_TOL = 1e-10
LATTICE_TOL = 1e-7


def grf_rhs(state, pack=None):
    """``(dg/dt, db/dt) = (-2 Rc + H2/2, -d*H)``."""
    pk = geo.curvature(state) if pack is None else pack
    return -2.0 * pk.Rc + 0.5 * pk.H2, -pk.dstar_H


def grf_consistency(state, pack=None):
    """Defect of ``d(g - b)/dt = -2 Rc+`` for :func:`grf_rhs`."""
    pk = geo.curvature(state) if pack is None else pack
    dg, db = grf_rhs(state, pk)
    return state.max_abs(dg - db + 2.0 * pk.Rc_plus)


def gauged_rhs(state):
    """``(-2 (Rc - H2/4 + nabla^2 f), -(d*H + i_{grad f} H))`` with ``f`` the minimizer."""
    st = fn.with_minimizer(state)
    eq_g, eq_b = geo.soliton_equations(st)
    return -2.0 * eq_g, -eq_b


RHS = {"grf": grf_rhs, "gauged": gauged_rhs}


@dataclass
class StepControl:
    """Step-doubling control for classical RK4."""

    tol: float = None
    dt0: float = 1e-2
    dt_min: float = 1e-6
    dt_max: float = 0.1
    stop_residual: float = 1e-9
    max_steps: int = 100000

    def resolved(self, backend):
        tol = self.tol
        if tol is None:
            tol = HOMOGENEOUS_TOL if backend.is_homogeneous else LATTICE_TOL
        return StepControl(tol, self.dt0, self.dt_min, self.dt_max, self.stop_residual,
                           self.max_steps)


@dataclass
class FlowTrajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    lambda_series: list = field(default_factory=list)
    residual_series: list = field(default_factory=list)
    min_eig_series: list = field(default_factory=list)
    status: str = "running"
    reason: str = ""
    rate_fit: dict = None

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def total_residuals(self):
        return [float(np.hypot(a, b)) for a, b in self.residual_series]

    def lambda_violation(self):
        """Largest decrease of ``lambda`` between consecutive samples (0 if monotone)."""
        lam = np.asarray(self.lambda_series)
        if lam.size < 2:
            return 0.0
        return float(max(0.0, -np.min(np.diff(lam))))

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "lambda", "r_g", "r_b", "min_eig_g"])
            for t, lam, (rg, rb), me in zip(self.times, self.lambda_series,
                                             self.residual_series, self.min_eig_series):
                w.writerow([repr(float(t)), repr(float(lam)), repr(float(rg)), repr(float(rb)),
                            repr(float(me))])

    def summary(self):
        return {
            "status": self.status,
            "reason": self.reason,
            "steps": len(self.times) - 1,
            "t_final": float(self.times[-1]),
            "lambda_initial": float(self.lambda_series[0]),
            "lambda_final": float(self.lambda_series[-1]),
            "lambda_violation": self.lambda_violation(),
            "residual_final": self.total_residuals[-1],
            "rate_fit": self.rate_fit,
        }


def rk4_step(state, dt, rhs):
    """One classical RK4 step of ``(g, b)``."""
    y0 = (state.g, state.b)

    def f(y):
        return rhs(state.replace(g=y[0], b=y[1]))

    def add(y, k, c):
        return y[0] + c * k[0], y[1] + c * k[1]

    k1 = f(y0)
    k2 = f(add(y0, k1, dt / 2))
    k3 = f(add(y0, k2, dt / 2))
    k4 = f(add(y0, k3, dt))
    g = y0[0] + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    b = y0[1] + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    # keep g symmetric and b skew against roundoff drift
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    b = 0.5 * (b - np.swapaxes(b, -1, -2))
    return state.replace(g=g, b=b)


def _min_eig(g):
    return float(np.min(np.linalg.eigvalsh(g)))


def _diagnostics(state):
    res = fn.lambda_min(state)
    st = state.replace(f=res.f)
    rg, rb = geo.soliton_residual(st)
    return res.value, (rg, rb), st


def integrate(state0, T, control=None, rhs="gauged", record_states=True):
    """Integrate from ``state0`` up to time ``T`` with step-doubling RK4.

    Stops early once the soliton residual drops below ``control.stop_residual``
    (status ``"converged"``) or if ``g`` stops being positive definite
    (status ``"blowup"``).
    """
    ctl = (control or StepControl()).resolved(state0.backend)
    rhs_fn = RHS[rhs] if isinstance(rhs, str) else rhs
    traj = FlowTrajectory()
    lam, res, st = _diagnostics(state0)
    state = st

    def record(t, s, lam, res):
        traj.times.append(float(t))
        traj.states.append(s if record_states else None)
        traj.lambda_series.append(float(lam))
        traj.residual_series.append((float(res[0]), float(res[1])))
        traj.min_eig_series.append(_min_eig(s.g))

    record(0.0, state, lam, res)
    if np.hypot(*res) < ctl.stop_residual:
        traj.status, traj.reason = "converged", "initial state is a soliton"
        traj.states[-1] = state
        return traj
    t, dt = 0.0, min(ctl.dt0, ctl.dt_max)
    for _ in range(ctl.max_steps):
        if t >= T - 1e-14:
            traj.status, traj.reason = "finished", f"reached T={T}"
            break
        dt = min(dt, T - t)
        try:
            full = rk4_step(state, dt, rhs_fn)
            half = rk4_step(rk4_step(state, dt / 2, rhs_fn), dt / 2, rhs_fn)
        except (ValueError, np.linalg.LinAlgError) as exc:
            if dt > ctl.dt_min:
                dt = max(ctl.dt_min, dt / 4)
                continue
            traj.status, traj.reason = "blowup", f"step failed at t={t:.6g}: {exc}"
            break
        err = max(float(np.max(np.abs(full.g - half.g))), float(np.max(np.abs(full.b - half.b))))
        err /= 15.0
        if err > ctl.tol and dt > ctl.dt_min:
            dt = max(ctl.dt_min, dt * max(0.2, 0.9 * (ctl.tol / err) ** 0.2))
            continue
        # Richardson-extrapolated accepted state
        g = half.g + (half.g - full.g) / 15.0
        b = half.b + (half.b - full.b) / 15.0
        try:
            state = state.replace(g=g, b=b)
            lam, res, state = _diagnostics(state)
        except (ValueError, np.linalg.LinAlgError) as exc:
            traj.status, traj.reason = "blowup", f"metric degenerate at t={t + dt:.6g}: {exc}"
            break
        t += dt
        record(t, state, lam, res)
        if np.hypot(*res) < ctl.stop_residual:
            traj.status, traj.reason = "converged", f"soliton residual below {ctl.stop_residual:g}"
            break
        grow = 2.0 if err == 0 else min(2.0, 0.9 * (ctl.tol / err) ** 0.2)
        dt = float(np.clip(dt * grow, ctl.dt_min, ctl.dt_max))
    else:
        traj.status, traj.reason = "stopped", "step limit reached"
    traj.rate_fit = fit_rate(traj.times, traj.total_residuals)
    if not record_states:
        traj.states = [traj.states[0] or state0, state]
    return traj


def fit_rate(times, residuals, r2_min=0.99, min_points=5):
    """Least-squares fit of ``log r = a - rate * t`` over the final decade of decay.

    Returns ``{"rate", "r2", "points", "fitted"}``; ``fitted`` is false when
    the fit is too poor (``r2 < r2_min``) or the data too short.
    """
    t = np.asarray(times, dtype=float)
    r = np.asarray(residuals, dtype=float)
    keep = r > 0
    t, r = t[keep], r[keep]
    if r.size < min_points:
        return {"rate": None, "r2": None, "points": int(r.size), "fitted": False}
    end = r[-1]
    above = np.nonzero(r >= 10.0 * end)[0]
    start = int(above[-1]) if above.size else 0
    tt, lr = t[start:], np.log(r[start:])
    if tt.size < min_points:
        tt, lr = t[-min_points:], np.log(r[-min_points:])
    A = np.vstack([np.ones_like(tt), tt]).T
    coef, *_ = np.linalg.lstsq(A, lr, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((lr - pred) ** 2))
    ss_tot = float(np.sum((lr - lr.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return {"rate": float(-coef[1]), "r2": float(r2), "points": int(tt.size),
            "fitted": bool(r2 >= r2_min)}


def lambda_rate_check(traj):
    """Compare the discrete ``d lambda/dt`` with ``2 ||Rc^{H,f}||_f^2`` along a trajectory.

    Returns the largest relative defect over interior samples, using central
    differences of the recorded series.
    """
    worst = 0.0
    for k in range(1, len(traj.times) - 1):
        t0, t1, t2 = traj.times[k - 1:k + 2]
        l0, _, l2 = traj.lambda_series[k - 1:k + 2]
        # second-order derivative estimate on a nonuniform grid
        slope = (l2 - l0) / (t2 - t0)
        st = fn.with_minimizer(traj.states[k])
        pred = 2.0 * st.norm_f(geo.rc_Hf(st)) ** 2
        # skip samples where the lambda increments are at roundoff level
        if pred * (t2 - t0) > 1e-10:
            worst = max(worst, abs(slope - pred) / pred)
    return worst


def lambda_derivative_check(state, dts=(1e-2, 5e-3), rhs="gauged"):
    """Central difference of ``lambda`` along one RK4 step each way against ``2 ||Rc^{H,f}||_f^2``.

    Returns the errors for each ``dt`` and the observed order between the
    first two (2 expected).
    """
    rhs_fn = RHS[rhs] if isinstance(rhs, str) else rhs
    st = fn.with_minimizer(state)
    pred = 2.0 * st.norm_f(geo.rc_Hf(st)) ** 2
    errs = []
    for dt in dts:
        lp = fn.lambda_value(rk4_step(st, dt, rhs_fn))
        lm = fn.lambda_value(rk4_step(st, -dt, rhs_fn))
        errs.append(abs((lp - lm) / (2 * dt) - pred))
    order = None
    if len(dts) > 1 and errs[1] > 0:
        order = fn.observed_order(errs[0], errs[1], dts[0] / dts[1])
    return {"predicted": pred, "errors": errs, "dts": list(dts), "order": order}


# experiments --------------------------------------------------------------------

def _unit(state, gamma):
    nrm = state.norm_f(gamma)
    if nrm == 0:
        raise ValueError("zero direction")
    return gamma / nrm


def stability_experiment(soliton, eps_list=(1e-2,), directions=2, T=20.0, seed=0,
                         control=None):
    """Perturb a soliton along sampled slice and gauge directions and flow back.

    For every direction and amplitude, reports whether the trajectory stayed
    within ``10 * eps`` of the start (max-norm on ``g`` and ``b``), the final
    residual, the fitted rate, the linearization prediction ``2 |Q| / |gamma|^2``
    for slice directions, and the drift of ``lambda``.
    """
    from . import variation as var
    st0 = fn.with_minimizer(soliton)
    var.check_soliton(st0)
    lam0 = fn.lambda_value(st0)
    rng = np.random.default_rng(seed)
    runs = []
    for kind in ("slice", "gauge"):
        for k in range(directions):
            raw = fn.random_direction(st0, rng)
            gam = var.project_to_slice(st0, raw) if kind == "slice" else var.project_to_gauge(st0, raw)
            if st0.norm_f(gam) < 1e-12:
                runs.append({"kind": kind, "direction": k, "skipped": "empty component"})
                continue
            gam = _unit(st0, gam)
            q = var.quadratic_form(st0, gam) if kind == "slice" else 0.0
            for eps in eps_list:
                if eps == 0:
                    traj = integrate(st0, T, control, record_states=False)
                else:
                    traj = integrate(fn.perturb(st0, gam, eps), T, control, record_states=False)
                final = traj.final_state
                drift = max(float(np.max(np.abs(final.g - st0.g))),
                            float(np.max(np.abs(final.b - st0.b))))
                runs.append({
                    "kind": kind, "direction": k, "eps": eps,
                    "status": traj.status,
                    "stayed_in_neighborhood": bool(drift <= 10 * max(eps, 1e-15)),
                    "norm": "max-norm of (g, b) components in the fixed basis",
                    "drift": drift,
                    "limit_residual": traj.total_residuals[-1],
                    "rate_fit": traj.rate_fit,
                    "predicted_rate": 2.0 * abs(q) if kind == "slice" else None,
                    "heuristic_rate": abs(q) if kind == "slice" else None,
                    "lambda_shift": traj.lambda_series[-1] - lam0,
                    "lambda_violation": traj.lambda_violation(),
                })
    return {"lambda0": lam0, "runs": runs}


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
