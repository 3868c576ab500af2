"""Experiment configuration: a JSON object with a fixed key set.

Top-level keys (``problem`` and ``solvers`` are required)::

    name        string, used in output file names (default "experiment")
    problem     {kind: "special_case" | "qp", k, n, m, noise_delta, seed}
    constraint  {kind: "cardinality" | "polytope" | "box", k, u}
    solvers     [{name, T, batch, label, params: {...}}, ...]
    online      {enabled, horizon, delay: {kind, lo, hi, list}, K, hindsight_iters}
    repeats     list of distinct seeds (default [0])
    output      {dir, emit_svg}

Offline solver names: GA, BGA, CG, SCG, BFW.  Online solver names: OGA,
OBGA, Meta-FW, Meta-FW-VR.  Solver ``params`` keys: c (default 1), gamma,
eta, start ("origin-projected" or "x_loc"), delta, v0, step ("theory" or
"sqrtT"), K, grad_bound.  ``batch`` defaults to 1 and ``emit_svg`` to false.
Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import json
import numbers
from dataclasses import dataclass, field
from pathlib import Path

from ..exceptions import ConfigError

OFFLINE_SOLVERS = ("GA", "BGA", "CG", "SCG", "BFW")
ONLINE_SOLVERS = ("OGA", "OBGA", "Meta-FW", "Meta-FW-VR")

_TOP_KEYS = {"name", "problem", "constraint", "solvers", "online", "repeats", "output"}
_PROBLEM_KEYS = {"kind", "k", "n", "m", "noise_delta", "seed"}
_CONSTRAINT_KEYS = {"kind", "k", "u"}
_SOLVER_KEYS = {"name", "T", "batch", "label", "params"}
_PARAM_KEYS = {"c", "gamma", "eta", "start", "delta", "v0", "step", "K", "grad_bound"}
_ONLINE_KEYS = {"enabled", "horizon", "delay", "K", "hindsight_iters"}
_DELAY_KEYS = {"kind", "lo", "hi", "list"}
_OUTPUT_KEYS = {"dir", "emit_svg"}


@dataclass(frozen=True)
class ProblemSpec:
    kind: str
    k: int | None = None
    n: int = 25
    m: int = 12
    noise_delta: float = 0.0
    seed: int = 0

    @property
    def label(self):
        if self.kind == "special_case":
            return f"special_case-k{self.k}"
        return f"qp-n{self.n}-m{self.m}"


@dataclass(frozen=True)
class ConstraintSpec:
    kind: str
    k: float | None = None
    u: float = 1.0


@dataclass(frozen=True)
class SolverSpec:
    name: str
    T: int
    batch: int = 1
    label: str = ""
    params: dict = field(default_factory=dict)

    @property
    def c(self):
        return float(self.params.get("c", 1.0))


@dataclass(frozen=True)
class DelaySpec:
    kind: str = "none"
    lo: int = 1
    hi: int = 5
    list: tuple = ()


@dataclass(frozen=True)
class OnlineSpec:
    enabled: bool = False
    horizon: int = 100
    delay: DelaySpec = DelaySpec()
    K: int = 50
    hindsight_iters: int = 200


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    problem: ProblemSpec
    constraint: ConstraintSpec
    solvers: tuple
    online: OnlineSpec
    repeats: tuple
    output_dir: str | None = None
    emit_svg: bool = False


def _keys(obj, allowed, where, required=()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{where}: unknown key {key!r}")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{where}: missing required key {key!r}")


def _int(value, where, low=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if low is not None and value < low:
        raise ConfigError(f"{where}: must be >= {low}, got {value}")
    return int(value)


def _real(value, where, low=None, positive=False):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if positive and not value > 0:
        raise ConfigError(f"{where}: must be > 0, got {value}")
    if low is not None and value < low:
        raise ConfigError(f"{where}: must be >= {low}, got {value}")
    return value


def _str(value, where, choices=None):
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(f"{where}: must be one of {', '.join(choices)}; got {value!r}")
    return value


def _bool(value, where):
    if not isinstance(value, bool):
        raise ConfigError(f"{where}: expected true or false, got {value!r}")
    return value


def _problem(raw):
    _keys(raw, _PROBLEM_KEYS, "problem", required=("kind",))
    kind = _str(raw["kind"], "problem.kind", ("special_case", "qp"))
    seed = _int(raw.get("seed", 0), "problem.seed", low=0)
    if kind == "special_case":
        if "k" not in raw:
            raise ConfigError("problem: missing required key 'k' for special_case")
        k = _int(raw["k"], "problem.k", low=1)
        delta = _real(raw.get("noise_delta", 1.0), "problem.noise_delta", low=0.0)
        return ProblemSpec(kind, k=k, n=2 * k + 1, m=0, noise_delta=delta, seed=seed)
    n = _int(raw.get("n", 25), "problem.n", low=1)
    m = _int(raw.get("m", 12), "problem.m", low=1)
    delta = _real(raw.get("noise_delta", 5.0), "problem.noise_delta", low=0.0)
    return ProblemSpec(kind, k=None, n=n, m=m, noise_delta=delta, seed=seed)


def _constraint(raw, problem):
    if raw is None:
        raw = {"kind": "cardinality" if problem.kind == "special_case" else "polytope"}
    _keys(raw, _CONSTRAINT_KEYS, "constraint", required=("kind",))
    kind = _str(raw["kind"], "constraint.kind", ("cardinality", "polytope", "box"))
    if kind == "cardinality":
        default_k = problem.k if problem.kind == "special_case" else None
        k = raw.get("k", default_k)
        if k is None:
            raise ConfigError("constraint: cardinality needs 'k'")
        k = _real(k, "constraint.k", low=0.0)
        if k > problem.n:
            raise ConfigError(f"constraint.k: must be <= n={problem.n}, got {k}")
        return ConstraintSpec(kind, k=k)
    if kind == "polytope" and problem.kind != "qp":
        raise ConfigError("constraint: polytope needs a qp problem (it carries A and b)")
    u = _real(raw.get("u", 1.0), "constraint.u", positive=True)
    return ConstraintSpec(kind, u=u)


def _params(raw, where):
    _keys(raw, _PARAM_KEYS, where)
    out = {}
    for key, value in raw.items():
        w = f"{where}.{key}"
        if key in ("c", "eta", "grad_bound", "delta"):
            out[key] = _real(value, w, positive=True)
        elif key == "gamma":
            g = _real(value, w, positive=True)
            if g > 1:
                raise ConfigError(f"{w}: must be in (0, 1], got {g}")
            out[key] = g
        elif key == "K":
            out[key] = _int(value, w, low=1)
        elif key == "start":
            out[key] = _str(value, w, ("origin-projected", "x_loc"))
        elif key == "v0":
            out[key] = _str(value, w, ("zero", "start"))
        elif key == "step":
            out[key] = _str(value, w, ("theory", "sqrtT"))
    return out


def _default_label(name, batch, params, online_K):
    if name == "CG":
        return "CG"
    if name.startswith("Meta-FW"):
        return f"{name}({params.get('K', online_K)})"
    return f"{name}({batch})"


def _solvers(raw, online, online_K):
    if not isinstance(raw, list) or not raw:
        raise ConfigError("solvers: expected a non-empty list")
    allowed = ONLINE_SOLVERS if online.enabled else OFFLINE_SOLVERS
    out, labels = [], set()
    for i, entry in enumerate(raw):
        where = f"solvers[{i}]"
        _keys(entry, _SOLVER_KEYS, where, required=("name",))
        name = _str(entry["name"], f"{where}.name", allowed)
        if online.enabled:
            T = online.horizon
            if "T" in entry and _int(entry["T"], f"{where}.T", low=1) != T:
                raise ConfigError(f"{where}.T: online solvers run for online.horizon={T}")
        else:
            if "T" not in entry:
                raise ConfigError(f"{where}: missing required key 'T'")
            T = _int(entry["T"], f"{where}.T", low=1)
        batch = _int(entry.get("batch", 1), f"{where}.batch", low=1)
        params = _params(entry.get("params", {}), f"{where}.params")
        label = entry.get("label")
        label = _default_label(name, batch, params, online_K) if label is None else _str(label, f"{where}.label")
        if "," in label or "\n" in label or not label:
            raise ConfigError(f"{where}.label: must be non-empty without commas or newlines")
        if label in labels:
            raise ConfigError(f"{where}.label: duplicate solver label {label!r}")
        labels.add(label)
        out.append(SolverSpec(name=name, T=T, batch=batch, label=label, params=params))
    return tuple(out)


def _online(raw):
    if raw is None:
        return OnlineSpec()
    _keys(raw, _ONLINE_KEYS, "online")
    enabled = _bool(raw.get("enabled", False), "online.enabled")
    horizon = _int(raw.get("horizon", 100), "online.horizon", low=1)
    K = _int(raw.get("K", 50), "online.K", low=1)
    iters = _int(raw.get("hindsight_iters", 200), "online.hindsight_iters", low=1)
    d = raw.get("delay", {"kind": "none"})
    _keys(d, _DELAY_KEYS, "online.delay", required=("kind",))
    kind = _str(d["kind"], "online.delay.kind", ("none", "uniform", "explicit"))
    lo = _int(d.get("lo", 1), "online.delay.lo", low=1)
    hi = _int(d.get("hi", 5), "online.delay.hi", low=lo)
    lst = ()
    if kind == "explicit":
        if "list" not in d or not isinstance(d["list"], list):
            raise ConfigError("online.delay: explicit delays need a 'list'")
        lst = tuple(_int(v, f"online.delay.list[{i}]", low=1) for i, v in enumerate(d["list"]))
        if len(lst) != horizon:
            raise ConfigError(f"online.delay.list: expected {horizon} delays, got {len(lst)}")
    return OnlineSpec(enabled, horizon, DelaySpec(kind, lo, hi, lst), K, iters)


def parse_config(data):
    """Validate an already-decoded JSON object."""
    _keys(data, _TOP_KEYS, "config", required=("problem", "solvers"))
    name = _str(data.get("name", "experiment"), "name")
    problem = _problem(data["problem"])
    constraint = _constraint(data.get("constraint"), problem)
    online = _online(data.get("online"))
    if online.enabled and problem.kind != "qp":
        raise ConfigError("online: only the qp problem has an online sequence")
    solvers = _solvers(data["solvers"], online, online.K)
    repeats = data.get("repeats", [0])
    if not isinstance(repeats, list) or not repeats:
        raise ConfigError("repeats: expected a non-empty list of seeds")
    repeats = tuple(_int(s, f"repeats[{i}]", low=0) for i, s in enumerate(repeats))
    if len(set(repeats)) != len(repeats):
        raise ConfigError("repeats: seeds must be distinct")
    out = data.get("output", {})
    _keys(out, _OUTPUT_KEYS, "output")
    out_dir = None if out.get("dir") is None else _str(out["dir"], "output.dir")
    emit_svg = _bool(out.get("emit_svg", False), "output.emit_svg")
    return ExperimentConfig(name, problem, constraint, solvers, online, repeats, out_dir, emit_svg)


def load_config(path):
    """Read and validate a config file; errors carry the line and column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as err:
        raise ConfigError(f"{path}: cannot read config: {err}") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: line {err.lineno}, column {err.colno}: {err.msg}") from err
    try:
        return parse_config(data)
    except ConfigError as err:
        raise ConfigError(f"{path}: {err}") from err
