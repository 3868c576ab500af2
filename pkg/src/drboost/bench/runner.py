"""Run every (solver, seed) cell of an experiment and collect CSV rows."""

from __future__ import annotations

import csv
import io
import json
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import offline, online
from ..feasible import Box, Cardinality, Polytope
from ..numerics import RngStream
from ..objectives import SpecialCaseObjective, online_qp_sequence, qp_generate

CSV_HEADER = ("run_id", "solver", "problem", "seed", "t", "f_value", "cum_value", "regret", "wallclock_ns")

_OFFLINE_RUNNERS = {
    "GA": offline.run_ga,
    "BGA": offline.run_bga,
    "CG": offline.run_cg,
    "SCG": offline.run_scg,
    "BFW": offline.run_bfw,
}


@dataclass(frozen=True)
class CsvRow:
    run_id: str
    solver: str
    problem: str
    seed: int
    t: int
    f_value: float
    cum_value: float
    regret: float | None
    wallclock_ns: int

    def fields(self):
        return (
            self.run_id, self.solver, self.problem, str(self.seed), str(self.t),
            repr(float(self.f_value)), repr(float(self.cum_value)),
            "" if self.regret is None else repr(float(self.regret)), str(int(self.wallclock_ns)),
        )


@dataclass
class ExperimentResult:
    rows: list
    failures: list = field(default_factory=list)
    hindsight: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.failures


def run_id(cfg, solver, seed):
    return f"{cfg.problem.label}:{solver.label}:seed{seed:06d}"


def _solver_stream(seed, label):
    return RngStream(seed).child(zlib.crc32(label.encode("utf-8")))


def _feasible_set(cfg, problem_obj):
    c = cfg.constraint
    n = cfg.problem.n
    if c.kind == "cardinality":
        return Cardinality(n, c.k)
    if c.kind == "box":
        return Box(np.full(n, c.u))
    return Polytope(problem_obj.A, problem_obj.b, problem_obj.u)


def _offline_cell(cfg, solver, seed):
    p = cfg.problem
    if p.kind == "special_case":
        obj = SpecialCaseObjective(p.k, p.noise_delta)
    else:
        obj = qp_generate(p.n, p.m, p.seed + seed, p.noise_delta)
    fset = _feasible_set(cfg, obj)
    params = solver.params
    start = params.get("start", "origin-projected")
    if start == "x_loc":
        if p.kind != "special_case":
            raise ValueError("start 'x_loc' is only defined for the special_case problem")
        start = obj.x_loc
    ocfg = offline.OfflineConfig(
        T=solver.T, batch=solver.batch, c=solver.c, gamma=params.get("gamma"),
        eta_override=params.get("eta"), delta_bfw=params.get("delta", 1.0), start=start,
        v0=params.get("v0", "zero"),
    )
    trace = _OFFLINE_RUNNERS[solver.name](obj, fset, ocfg, _solver_stream(seed, solver.label))
    rid = run_id(cfg, solver, seed)
    cum = np.cumsum(trace.values)
    return [
        CsvRow(rid, solver.label, p.label, seed, t + 1, trace.values[t], cum[t], None, trace.wallclock_ns[t])
        for t in range(trace.T)
    ]


@dataclass
class _OnlineContext:
    objs: list
    fset: object
    sched: object
    x_star: np.ndarray
    value: float
    alpha: float


def _online_context(cfg, seed):
    p, o = cfg.problem, cfg.online
    objs = online_qp_sequence(o.horizon, p.n, p.m, p.seed + seed, p.noise_delta)
    fset = _feasible_set(cfg, objs[0])
    d = o.delay
    sched = online.build_schedule(
        d.kind, o.horizon, RngStream(seed).child(0), lo=d.lo, hi=d.hi, delays=list(d.list) or None
    )
    x_star, value = online.approx_hindsight_opt(objs, fset, o.hindsight_iters)
    alpha = -math.expm1(-objs[0].meta.gamma)
    return _OnlineContext(objs, fset, sched, x_star, value, alpha)


def _online_cell(cfg, solver, seed, ctx):
    params = solver.params
    ocfg = online.OnlineConfig(
        T=cfg.online.horizon, batch=solver.batch, grad_bound=params.get("grad_bound"),
        K=params.get("K", cfg.online.K), gamma=params.get("gamma"), step=params.get("step", "theory"),
        eta_override=params.get("eta"),
    )
    rng = _solver_stream(seed, solver.label)
    if solver.name == "OBGA":
        trace = online.run_obga(ctx.objs, ctx.fset, ctx.sched, ocfg, rng)
    elif solver.name == "OGA":
        trace = online.run_oga(ctx.objs, ctx.fset, ctx.sched, ocfg, rng)
    else:
        trace = online.run_meta_fw(ctx.objs, ctx.fset, ctx.sched, ocfg, rng, solver.name == "Meta-FW-VR")
    regret = online.eval_alpha_regret(trace, ctx.objs, ctx.alpha, ctx.x_star)
    cum = trace.cum_rewards
    rid = run_id(cfg, solver, seed)
    return [
        CsvRow(rid, solver.label, cfg.problem.label, seed, t + 1, trace.rewards[t], cum[t], regret[t],
               trace.wallclock_ns[t])
        for t in range(trace.T)
    ]


def _guard(fn, *args):
    try:
        return fn(*args), None
    except Exception as err:  # a failed cell must not abort its siblings
        return None, f"{type(err).__name__}: {err}"


def run_experiment(cfg, parallel=1):
    """Run all cells; failures are recorded and never abort sibling cells.

    Rows come back sorted by ``(run_id, t)`` whatever the execution order.
    """
    cells = [(solver, seed) for seed in cfg.repeats for solver in cfg.solvers]
    result = ExperimentResult(rows=[])
    pool = ThreadPoolExecutor(max_workers=parallel) if parallel > 1 else None
    mapper = pool.map if pool is not None else map
    try:
        if cfg.online.enabled:
            contexts = dict(zip(cfg.repeats, mapper(lambda s: _guard(_online_context, cfg, s), cfg.repeats)))
            for seed, (ctx, err) in contexts.items():
                if ctx is not None:
                    result.hindsight[seed] = ctx.value

            def work(cell):
                solver, seed = cell
                ctx, err = contexts[seed]
                if ctx is None:
                    return None, f"hindsight optimum failed: {err}"
                return _guard(_online_cell, cfg, solver, seed, ctx)
        else:
            def work(cell):
                solver, seed = cell
                return _guard(_offline_cell, cfg, solver, seed)

        for (solver, seed), (rows, err) in zip(cells, mapper(work, cells)):
            if err is not None:
                result.failures.append({"run_id": run_id(cfg, solver, seed), "solver": solver.label,
                                        "seed": seed, "reason": err})
            else:
                result.rows.extend(rows)
    finally:
        if pool is not None:
            pool.shutdown()
    result.rows.sort(key=lambda r: (r.run_id, r.t))
    result.failures.sort(key=lambda f: f["run_id"])
    return result


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.fields())
    return buf.getvalue()


def write_outputs(cfg, result, out_dir):
    """Write ``<name>.csv``, ``<name>.failures.json`` and optionally ``<name>.svg``; return the paths."""
    from .svg import emit_svg

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / f"{cfg.name}.csv", "failures": out / f"{cfg.name}.failures.json"}
    paths["csv"].write_text(rows_to_csv(result.rows), encoding="utf-8")
    paths["failures"].write_text(json.dumps(result.failures, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if cfg.emit_svg and result.rows:
        y = "regret" if cfg.online.enabled else "f_value"
        paths["svg"] = out / f"{cfg.name}.svg"
        emit_svg(result.rows, {"x": "t", "y": y, "group_by": "solver"}, paths["svg"])
    return paths


def read_csv(path):
    """Read a results CSV back into ``CsvRow`` objects."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected CSV header {header}")
        rows = []
        for rec in reader:
            rows.append(CsvRow(
                rec[0], rec[1], rec[2], int(rec[3]), int(rec[4]), float(rec[5]), float(rec[6]),
                None if rec[7] == "" else float(rec[7]), int(rec[8]),
            ))
    return rows
