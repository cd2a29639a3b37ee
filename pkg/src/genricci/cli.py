"""Command-line runner: ``run <config>``, ``list-presets`` and ``schema``.

Exit status of ``run``: 0 when every asserted identity is within its
tolerance, 1 on a numeric failure (the failing residual is named), 2 on a
configuration error (the offending key path is named).
"""

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import config as cfgmod
from . import flow
from . import functional as fn
from . import geometry as geo
from . import lie
from . import pluriclosed as pc
from . import presets
from . import variation as var

HOMOGENEOUS = 1e-12
LATTICE = 1e-8


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


class Report:
    """Collects assertion lines and result sections for one run."""

    def __init__(self, out=None):
        self.assertions = []
        self.out = sys.stdout if out is None else out

    def check(self, anchor, name, value, tol, mode="le"):
        value = float(value)
        if mode == "le":
            ok = math.isfinite(value) and value <= tol
        elif mode == "ge":
            ok = math.isfinite(value) and value >= tol
        else:
            raise ValueError(mode)
        rel = "<=" if mode == "le" else ">="
        self.assertions.append({"anchor": anchor, "name": name, "value": value,
                                "tolerance": tol, "relation": rel, "passed": bool(ok)})
        word = "PASS" if ok else "FAIL"
        print(f"{word} [{anchor}] {name} = {value:.3e} (tol {rel} {tol:.1e})", file=self.out)
        return ok

    def info(self, anchor, text):
        print(f"INFO [{anchor}] {text}", file=self.out)

    @property
    def passed(self):
        return all(a["passed"] for a in self.assertions)

    def failures(self):
        return [a for a in self.assertions if not a["passed"]]


# state construction ------------------------------------------------------------------

def build_state(cfg, rng):
    bk = dict(cfg.backend)
    name = bk.pop("preset")
    st = presets.state(name, **bk)
    cs = None
    if "J" in cfg.state:
        cs = presets.complex_structure(cfg.state["J"], st.n)
    upd = {}
    for key in ("g", "b"):
        if key in cfg.state:
            arr = np.asarray(cfg.state[key], dtype=float)
            if arr.shape != (st.n, st.n):
                raise cfgmod.ConfigError(f"state.{key}", f"expected a {st.n}x{st.n} matrix")
            upd[key] = arr
    if upd:
        try:
            st = geo.homogeneous_state(st.backend, upd.get("g", st.g), upd.get("b", st.b), st.H0)
        except ValueError as exc:
            raise cfgmod.ConfigError("state", str(exc)) from None
    p = cfg.state.get("perturb")
    if p:
        st = perturb_state(st, cs, p, rng)
    return fn.with_minimizer(st), cs


def perturb_state(st, cs, p, rng):
    kind, eps = p["kind"], p["eps"]
    if kind == "pluriclosed":
        return pc.random_pluriclosed_perturbation(st, cs, eps, rng)
    if kind == "smooth":
        return presets.random_lattice_state(st.backend, rng, amplitude=eps,
                                            max_mode=p.get("max_mode", 1),
                                            torsion=p.get("torsion", 0.0))
    st = fn.with_minimizer(st)
    gam = fn.random_direction(st, rng)
    if kind == "slice":
        gam = var.project_to_slice(st, gam)
    return fn.perturb(st, gam / st.norm_f(gam), eps)


def _tol(state, override=None):
    if override is not None:
        return override
    return HOMOGENEOUS if state.backend.is_homogeneous else LATTICE


# tasks -------------------------------------------------------------------------------

def task_check_identities(cfg, st, cs, rep, rng):
    tol = _tol(st, cfg.params["tolerance"])
    pk = geo.curvature(st)
    for k, v in geo.bismut_trace_residuals(st, pk).items():
        rep.check("bismut_traces", f"bismut_{k}", v, tol)
    btol = tol if st.backend.is_homogeneous else 1e-6
    rep.check("bismut_bianchi", "cyclic_sum", geo.bianchi_residual(st), btol)
    rep.check("flow_form", "grf_bismut_ricci_form", flow.grf_consistency(st, pk), tol)
    rg, rb = geo.soliton_residual(st, pk)
    out = {"soliton_residual": [rg, rb]}
    if max(rg, rb) <= tol:
        suite = var.comm_suite(st, samples=cfg.params["samples"], seed=cfg.seed)
        for k in sorted(suite):
            rep.check("gauge_image" if k == "N_gauge_image" else "commutators", k, suite[k], tol)
        out["commutators"] = suite
    else:
        rep.info("soliton",
                 f"not a soliton (residual {max(rg, rb):.3e}); soliton identities skipped")
    if cs is not None:
        out["pluriclosed"] = pluriclosed_checks(st, cs, rep, tol, rng)
    return out


def pluriclosed_checks(st, cs, rep, tol, rng):
    hp = pc.hermitian_pack(st, cs)
    rep.check("hermitian", "nijenhuis", hp.nijenhuis_residual, tol)
    rep.check("hermitian", "ddc_omega", hp.pluriclosed_residual, tol)
    rep.check("hermitian", "H_plus_dc_omega", hp.torsion_residual, tol)
    rep.check("bismut_ricci_form", "bismut_J", pc.bismut_J_residual(st, cs), tol)
    rho = pc.bismut_ricci(st, cs)
    res = {"hermitian": hp.to_dict(), "rho_B_max": st.max_abs(rho)}
    rhs = pc.pluriclosed_rhs(st, cs)
    for k, v in sorted(rhs.residuals().items()):
        rep.check("gauge_equivalence", k, v, tol)
    res["gauge_equivalence"] = rhs.residuals()
    rs, rb = geo.soliton_residual(st)
    if max(rs, rb) > tol:
        rep.info("hermitian_variation", "state is not a soliton; second-variation checks skipped")
        return res
    rep.check("bismut_ricci_form", "rho_B", st.max_abs(rho), tol)
    if not st.backend.is_homogeneous:
        return res
    dom = pc.hermitian_slice_basis(st, cs)
    worst = 0.0
    for _ in range(5 if dom else 0):
        gam = sum(rng.standard_normal() * b for b in dom)
        worst = max(worst, pc.hermitian_second_variation(st, gam, cs).mismatch)
    rep.check("hermitian_variation", "formula_vs_quadratic_form", worst, 1e-10)
    a_worst = 0.0
    for _ in range(5):
        a = pc.aeppli_direction(st, cs, rng.standard_normal(st.n))
        a_worst = max(a_worst, abs(a["value"] - a["closed_form"]))
    rep.check("exact_directions", "formula_vs_closed_form", a_worst, tol)
    ig = pc.hermitian_kernel_checks(st, cs, seed=int(rng.integers(1 << 31)))
    for k, v in sorted(ig.residuals.items()):
        rep.check("kernel_parallel" if k.startswith("parallel") else "two_form_L"
                  if k.startswith("two_form") else "kernel_hermitian", k, v, tol)
    for note in ig.notes:
        rep.info("kernel_parallel", note)
    res.update({"hermitian_slice_dim": len(dom), "hermitian_mismatch": worst,
                "aeppli_defect": a_worst,
                "kernel": ig.to_dict()})
    return res


def task_soliton_verify(cfg, st, cs, rep, rng):
    tol = _tol(st, cfg.params["tolerance"])
    rg, rb = geo.soliton_residual(st)
    rep.check("soliton", "metric_equation", rg, tol)
    rep.check("soliton", "bfield_equation", rb, tol)
    return {"r_g": rg, "r_b": rb}


def task_lambda(cfg, st, cs, rep, rng):
    tol = cfg.params["tolerance"]
    res = fn.lambda_min(st, tol=1e-12 if tol is None else tol)
    ident = fn.lam_identity_residual(st, res)
    if st.backend.is_homogeneous:
        rep.check("minimizer", "normalization", res.normalization_residual, HOMOGENEOUS)
        rep.check("lambda", "lambda_identity", ident, HOMOGENEOUS)
    else:
        rep.check("minimizer", "normalization", res.normalization_residual, LATTICE)
        rep.check("lambda", "discrete_eigen_equation", res.eigen_residual, LATTICE)
        rep.info("lambda", f"pointwise identity with grid derivatives of f: {ident:.3e} "
                        "(discretization error, shrinks under refinement)")
    rep.info("lambda", f"lambda = {res.value!r}")
    return {"lambda": res.value, "normalization_residual": res.normalization_residual,
            "eigen_residual": res.eigen_residual, "pointwise_identity_residual": ident}


def task_spectrum(cfg, st, cs, rep, rng):
    tol = cfg.params["tolerance"]
    kw = {} if st.backend.is_homogeneous else {"max_mode": cfg.params["max_mode"]}
    sp = var.stability_spectrum(st, **({} if tol is None else {"tol": tol}), **kw)
    rep.check("operator_N", "symmetry_defect", sp.symmetry_defect, 1e-10)
    if st.backend.is_homogeneous:
        worst = max((var.long_residual(st, k) for k in sp.kernel_basis), default=0.0)
        rep.check("kernel", "kernel_long_equation", worst, 1e-10)
    rep.info("stability", f"verdict {sp.verdict}; kernel dimension {sp.kernel_dim}; "
                   f"max eigenvalue {max(sp.eigenvalues, default=0.0):.3e}")
    return {"spectrum": sp.to_dict()}


def _write_traj(cfg, traj, name):
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / f"{cfg.prefix}_{name}.csv"
    traj.write_csv(path)
    return str(path.name)


def task_flow(cfg, st, cs, rep, rng):
    p = cfg.params
    ctl = flow.StepControl(p["step_tolerance"], p["dt0"], p["dt_min"], p["dt_max"],
                           p["stop_residual"])
    traj = flow.integrate(st, p["T"], ctl, rhs=p["rhs"], record_states=False)
    rep.check("monotonicity", "lambda_decrease", traj.lambda_violation(),
              p["monotonicity_tolerance"])
    d = flow.lambda_derivative_check(st, rhs=p["rhs"])
    if d["order"] is not None and d["errors"][0] > 1e-13:
        rep.check("monotonicity", "dlambda_dt_order", d["order"], 1.8, mode="ge")
    rep.info("convergence", f"status {traj.status}: {traj.reason}")
    return {"summary": traj.summary(), "dlambda_dt": d,
            "trajectory_csv": _write_traj(cfg, traj, "trajectory")}


def task_stability(cfg, st, cs, rep, rng):
    p = cfg.params
    out = flow.stability_experiment(st, p["eps"], p["directions"], p["T"], seed=cfg.seed)
    worst = max((r.get("lambda_violation", 0.0) for r in out["runs"]), default=0.0)
    rep.check("monotonicity", "lambda_decrease", worst, p["monotonicity_tolerance"])
    for r in out["runs"]:
        if "status" in r:
            rep.info("convergence",
                     f"{r['kind']} #{r['direction']} eps={r['eps']:g}: {r['status']}, "
                     f"stayed={r['stayed_in_neighborhood']}")
    return out


def task_pluriclosed_flow(cfg, st, cs, rep, rng):
    p = cfg.params
    hp = pc.hermitian_pack(st, cs)
    rep.check("hermitian", "ddc_omega", hp.pluriclosed_residual, HOMOGENEOUS)
    rep.check("hermitian", "H_plus_dc_omega", hp.torsion_residual, HOMOGENEOUS)
    rhs = pc.pluriclosed_rhs(st, cs)
    for k, v in sorted(rhs.residuals().items()):
        rep.check("gauge_equivalence", k, v, HOMOGENEOUS)
    ctl = flow.StepControl(stop_residual=p["stop_residual"])
    traj = flow.integrate(st, p["T"], ctl, rhs=pc.flow_rhs(cs))
    tc = pc.trajectory_checks(traj, cs)
    rep.check("hermitian", "torsion_along_flow", tc["torsion"], 1e-10)
    rep.check("gauge_equivalence", "compatibility_along_flow", tc["compatibility"], 1e-10)
    rep.check("monotonicity", "lambda_decrease", traj.lambda_violation(),
              p["monotonicity_tolerance"])
    rep.info("convergence", f"status {traj.status}: {traj.reason}")
    fin = traj.final_state
    csv_name = _write_traj(cfg, traj, "trajectory")
    return {"summary": traj.summary(), "trajectory_csv": csv_name,
            "pluriclosed": {"initial": rhs.residuals(), "trajectory": tc,
                            "final_metric": fin.g}}


def _sampling(cfg, st, rep, sampler, anchor):
    p = cfg.params
    rows, maxima = [], []
    for radius in p["radii"]:
        rs = sampler(st, radius, p["count"], cfg.seed)
        finite = all(math.isfinite(r[3]) for r in rs)
        rep.check(anchor, f"ratio_finite_r{radius:g}", 0.0 if finite else math.inf, 0.0)
        maxima.append(fn.max_ratio(rs))
        rows += [(radius,) + tuple(r) for r in rs]
    spread = max(maxima) / min(maxima) if min(maxima) > 0 else math.inf
    rep.check(anchor, "max_ratio_radius_spread", spread, p["stability_factor"])
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / f"{cfg.prefix}_samples.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["radius", "sample_id", "lhs", "rhs", "ratio"])
        for r in rows:
            w.writerow([repr(float(r[0])), r[1], repr(float(r[2])), repr(float(r[3])),
                        repr(float(r[4]))])
    return {"max_ratio": dict(zip([repr(r) for r in p["radii"]], maxima)),
            "spread": spread, "samples_csv": path.name}


def task_lojasiewicz(cfg, st, cs, rep, rng):
    return _sampling(cfg, st, rep, fn.lojasiewicz_sample, "lojasiewicz")


def task_transversality(cfg, st, cs, rep, rng):
    return _sampling(cfg, st, rep, fn.transversality_sample, "transversality")


TASKS = {
    "check-identities": task_check_identities,
    "soliton-verify": task_soliton_verify,
    "lambda": task_lambda,
    "spectrum": task_spectrum,
    "flow": task_flow,
    "stability": task_stability,
    "pluriclosed-flow": task_pluriclosed_flow,
    "lojasiewicz": task_lojasiewicz,
    "transversality": task_transversality,
}


def run(cfg, out=None):
    """Execute a validated configuration; returns ``(exit_code, report_dict)``."""
    out = sys.stdout if out is None else out
    rng = np.random.default_rng(cfg.seed)
    rep = Report(out)
    st, cs = build_state(cfg, rng)
    results = TASKS[cfg.task](cfg, st, cs, rep, rng)
    payload = {"task": cfg.task, "seed": cfg.seed, "backend": cfg.backend, "state": cfg.state,
               "params": cfg.params, "assertions": rep.assertions, "results": results,
               "passed": rep.passed}
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / f"{cfg.prefix}_report.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")
    code = 0 if rep.passed else 1
    if code:
        names = ", ".join(f"{a['anchor']}:{a['name']}" for a in rep.failures())
        print(f"FAILED: {names}", file=out)
    print(f"report written to {path}", file=out)
    return code, payload


def _list_presets(out):
    print("backends:", file=out)
    for k, v in presets.STATE_PRESETS.items():
        print(f"  {k:<10} {v}", file=out)
    print("algebras:", file=out)
    for k, v in lie.PRESETS.items():
        print(f"  {k:<10} {v}", file=out)
    print("complex structures:", file=out)
    print("  hopf       J e1 = e2, J e3 = e0 on su(2)+u(1)", file=out)
    print("  standard   J e_2k = e_2k+1 on an even-dimensional torus", file=out)
    print("tasks:", file=out)
    for t in cfgmod.TASKS:
        print(f"  {t}", file=out)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="genricci",
                                 description="Generalized Ricci flow numerical laboratory")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment configuration (YAML or JSON)")
    r.add_argument("config")
    sub.add_parser("list-presets", help="list presets, complex structures and tasks")
    sub.add_parser("schema", help="print the configuration schema as JSON")
    args = ap.parse_args(argv)
    if args.cmd == "list-presets":
        _list_presets(sys.stdout)
        return 0
    if args.cmd == "schema":
        print(json.dumps(_jsonable(cfgmod.SCHEMA), sort_keys=True, indent=2))
        return 0
    try:
        cfg = cfgmod.load(args.config)
        code, _ = run(cfg)
    except cfgmod.ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
