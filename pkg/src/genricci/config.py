"""Experiment configuration: schema, loading and validation.

A configuration is one YAML or JSON document. Every run is determined by the
document and its ``seed``; nothing is read from the environment.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

TASKS = ("check-identities", "soliton-verify", "lambda", "spectrum", "flow", "stability",
         "pluriclosed-flow", "lojasiewicz", "transversality")

_NUM = (int, float)

# key -> (type, default, help)
TASK_PARAMS = {
    "check-identities": {
        "samples": (int, 5, "random inputs per identity"),
        "tolerance": (float, None, "override of the backend tolerance"),
    },
    "soliton-verify": {"tolerance": (float, None, "residual tolerance")},
    "lambda": {"tolerance": (float, None, "eigen-solver tolerance")},
    "spectrum": {
        "tolerance": (float, None, "eigenvalue kernel threshold"),
        "max_mode": (int, 1, "lattice Fourier trial modes"),
    },
    "flow": {
        "T": (float, 20.0, "final time"),
        "rhs": (str, "gauged", "gauged | grf"),
        "dt0": (float, 1e-2, "initial step"),
        "dt_min": (float, 1e-6, "smallest step"),
        "dt_max": (float, 0.1, "largest step"),
        "step_tolerance": (float, None, "local error tolerance"),
        "stop_residual": (float, 1e-9, "stop once the soliton residual is below this"),
        "monotonicity_tolerance": (float, 1e-9, "allowed decrease of lambda"),
    },
    "stability": {
        "eps": (list, [1e-2], "perturbation amplitudes"),
        "directions": (int, 2, "directions per kind (slice, gauge)"),
        "T": (float, 20.0, "final time"),
        "monotonicity_tolerance": (float, 1e-9, "allowed decrease of lambda"),
    },
    "pluriclosed-flow": {
        "T": (float, 40.0, "final time"),
        "stop_residual": (float, 1e-9, "stop once the soliton residual is below this"),
        "monotonicity_tolerance": (float, 1e-9, "allowed decrease of lambda"),
    },
    "lojasiewicz": {
        "radii": (list, [1e-3, 1e-2], "perturbation radii"),
        "count": (int, 100, "samples per radius"),
        "stability_factor": (float, 2.0, "allowed ratio between radius maxima"),
    },
    "transversality": {
        "radii": (list, [1e-3, 1e-2], "perturbation radii"),
        "count": (int, 100, "samples per radius"),
        "stability_factor": (float, 2.0, "allowed ratio between radius maxima"),
    },
}

SCHEMA = {
    "task": {"type": "string", "enum": list(TASKS), "required": True},
    "seed": {"type": "integer", "default": 0},
    "backend": {
        "type": "object", "required": True,
        "properties": {
            "preset": {"type": "string",
                       "enum": ["su2", "hopf", "einstein", "abelian:<n>", "lattice"]},
            "kappa": {"type": "number", "default": 1.0, "applies_to": "su2"},
            "dim": {"type": "integer", "default": 3, "applies_to": "lattice"},
            "N": {"type": "integer", "default": 8, "applies_to": "lattice"},
            "L": {"type": "number", "default": "2*pi", "applies_to": "lattice"},
            "stencil_order": {"type": "integer", "default": 2, "applies_to": "lattice"},
        },
    },
    "state": {
        "type": "object",
        "properties": {
            "g": {"type": "matrix", "applies_to": "homogeneous"},
            "b": {"type": "matrix", "applies_to": "homogeneous"},
            "J": {"type": "string", "enum": ["hopf", "standard"]},
            "perturb": {
                "type": "object",
                "properties": {
                    "kind": {"type": "string",
                             "enum": ["random", "slice", "pluriclosed", "smooth"]},
                    "eps": {"type": "number"},
                    "max_mode": {"type": "integer", "default": 1, "applies_to": "smooth"},
                    "torsion": {"type": "number", "default": 0.0, "applies_to": "smooth"},
                },
            },
        },
    },
    "params": {"type": "object",
               "per_task": {t: {k: {"type": v[0].__name__, "default": v[1], "help": v[2]}
                                for k, v in p.items()} for t, p in TASK_PARAMS.items()}},
    "output": {
        "type": "object",
        "properties": {"dir": {"type": "string", "default": "."},
                       "prefix": {"type": "string", "default": "<task>"}},
    },
}


class ConfigError(ValueError):
    """Invalid configuration; ``location`` is the dotted key path."""

    def __init__(self, location, message):
        super().__init__(f"config error at {location}: {message}")
        self.location = location


@dataclass
class ExperimentConfig:
    task: str
    backend: dict
    seed: int = 0
    state: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @property
    def out_dir(self):
        return Path(self.output.get("dir", "."))

    @property
    def prefix(self):
        return self.output.get("prefix", self.task)


def _expect(cond, loc, msg):
    if not cond:
        raise ConfigError(loc, msg)


def _check_type(value, typ, loc):
    if typ is float:
        _expect(isinstance(value, _NUM) and not isinstance(value, bool), loc, "expected a number")
        return float(value)
    if typ is int:
        _expect(isinstance(value, int) and not isinstance(value, bool), loc, "expected an integer")
        return value
    if typ is list:
        _expect(isinstance(value, list) and value, loc, "expected a non-empty list")
        for i, v in enumerate(value):
            _expect(isinstance(v, _NUM) and not isinstance(v, bool), f"{loc}[{i}]",
                    "expected a number")
        return [float(v) for v in value]
    _expect(isinstance(value, typ), loc, f"expected {typ.__name__}")
    return value


def _matrix(value, loc):
    _expect(isinstance(value, list) and value and all(isinstance(r, list) for r in value),
            loc, "expected a list of rows")
    n = len(value)
    for i, row in enumerate(value):
        _expect(len(row) == n, f"{loc}[{i}]", "matrix must be square")
        for j, v in enumerate(row):
            _expect(isinstance(v, _NUM) and not isinstance(v, bool), f"{loc}[{i}][{j}]",
                    "expected a number")
    return value


def validate(doc):
    """Check a parsed document and fill defaults; raises :class:`ConfigError`."""
    _expect(isinstance(doc, dict), "<root>", "expected a mapping")
    known = {"task", "seed", "backend", "state", "params", "output"}
    for k in doc:
        _expect(k in known, k, f"unknown key (allowed: {', '.join(sorted(known))})")
    _expect("task" in doc, "task", "missing")
    task = doc["task"]
    _expect(task in TASKS, "task", f"unknown task {task!r}; one of {', '.join(TASKS)}")
    seed = _check_type(doc.get("seed", 0), int, "seed")

    _expect("backend" in doc, "backend", "missing")
    bk = doc["backend"]
    _expect(isinstance(bk, dict), "backend", "expected a mapping")
    _expect("preset" in bk, "backend.preset", "missing")
    preset = bk["preset"]
    _expect(isinstance(preset, str), "backend.preset", "expected a string")
    ok = preset in ("su2", "hopf", "einstein", "lattice") or preset.startswith("abelian:")
    _expect(ok, "backend.preset", f"unknown preset {preset!r}")
    allowed = {"preset"} | ({"kappa"} if preset == "su2" else set())
    if preset == "lattice":
        allowed |= {"dim", "N", "L", "stencil_order"}
    backend = {"preset": preset}
    for k, v in bk.items():
        if k == "preset":
            continue
        _expect(k in allowed, f"backend.{k}", f"not valid for preset {preset!r}")
        typ = float if k in ("kappa", "L") else int
        backend[k] = _check_type(v, typ, f"backend.{k}")
    if preset.startswith("abelian:"):
        tail = preset.split(":", 1)[1]
        _expect(tail.isdigit() and int(tail) >= 1, "backend.preset", "use 'abelian:n' with n >= 1")

    st = doc.get("state", {}) or {}
    _expect(isinstance(st, dict), "state", "expected a mapping")
    state = {}
    for k, v in st.items():
        loc = f"state.{k}"
        if k in ("g", "b"):
            _expect(preset != "lattice", loc, "explicit fields only on homogeneous presets")
            state[k] = _matrix(v, loc)
        elif k == "J":
            _expect(v in ("hopf", "standard"), loc, "one of hopf, standard")
            state[k] = v
        elif k == "perturb":
            _expect(isinstance(v, dict), loc, "expected a mapping")
            kind = v.get("kind", "random")
            _expect(kind in ("random", "slice", "pluriclosed", "smooth"), f"{loc}.kind",
                    "one of random, slice, pluriclosed, smooth")
            _expect("eps" in v, f"{loc}.eps", "missing")
            p = {"kind": kind, "eps": _check_type(v["eps"], float, f"{loc}.eps")}
            for kk, vv in v.items():
                if kk in ("kind", "eps"):
                    continue
                _expect(kk in ("max_mode", "torsion"), f"{loc}.{kk}", "unknown key")
                p[kk] = _check_type(vv, int if kk == "max_mode" else float, f"{loc}.{kk}")
            if kind == "pluriclosed":
                _expect("J" in st, "state.J", "pluriclosed perturbations need a complex structure")
            if kind == "smooth":
                _expect(preset == "lattice", f"{loc}.kind", "smooth perturbations need the lattice")
            state[k] = p
        else:
            raise ConfigError(loc, "unknown key (allowed: g, b, J, perturb)")
    if task == "pluriclosed-flow":
        _expect("J" in state, "state.J", "pluriclosed-flow needs a complex structure")

    spec = TASK_PARAMS[task]
    pr = doc.get("params", {}) or {}
    _expect(isinstance(pr, dict), "params", "expected a mapping")
    params = {}
    for k, v in pr.items():
        _expect(k in spec, f"params.{k}", f"unknown for task {task!r} "
                f"(allowed: {', '.join(sorted(spec))})")
        params[k] = _check_type(v, spec[k][0], f"params.{k}")
    for k, (_, default, _) in spec.items():
        params.setdefault(k, default)
    if task == "flow":
        _expect(params["rhs"] in ("gauged", "grf"), "params.rhs", "one of gauged, grf")

    out = doc.get("output", {}) or {}
    _expect(isinstance(out, dict), "output", "expected a mapping")
    for k, v in out.items():
        _expect(k in ("dir", "prefix"), f"output.{k}", "unknown key (allowed: dir, prefix)")
        _check_type(v, str, f"output.{k}")
    return ExperimentConfig(task, backend, seed, state, params, dict(out))


def load(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from None
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(str(path), f"parse failure: {exc}") from None
    return validate(doc)
