"""Invariant and experiment checks behind ``drboost verify``.

Suites: ``core`` (estimator, inequalities, oracles, structure, online
causality), ``numeric`` (sampler, quadrature, spectral norm, projection and
LMO against brute force) and ``experiments`` (scaled experiment reproductions
and determinism).  Each check returns a ``Check`` with the measured values.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import boosting, offline, online
from ..boosting import boost_constants, boost_grad_draws, grad_F_ref, value_F_ref
from ..feasible import Box, Cardinality, Polytope, lmo_polytope, project_polytope
from ..numerics import RngStream, gauss_legendre01, spectral_norm
from ..objectives import (
    FunctionObjective,
    ObjectiveMeta,
    QuadraticObjective,
    SpecialCaseObjective,
    qp_generate,
    verify_structure,
)

CONFIG_DIR = Path(__file__).resolve().parent / "configs"


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    check = fn(*args, **kwargs)
    check.seconds = time.perf_counter() - t0
    return check


def analytic_fixture(noise_delta=1.0):
    """``f(x) = -x'x/2 + 1'x`` on ``[0, 1]^2`` (``H = -I``, ``u = 1``)."""
    return QuadraticObjective(-np.eye(2), noise_delta=noise_delta)


# core ---------------------------------------------------------------------

def check_unbiasedness(draws=100_000, seed=0, estimator=boost_grad_draws):
    obj = analytic_fixture(1.0)
    x = np.ones(2)
    target = np.full(2, 1.0 - 2.0 * math.exp(-1.0))
    D = estimator(obj, x, 1.0, draws, RngStream(seed))
    mean = D.mean(axis=0)
    se = D.std(axis=0, ddof=1) / math.sqrt(draws)
    z = np.abs(mean - target) / se
    return Check("unbiasedness", bool(np.all(z <= 4.0)),
                 f"mean={np.array2string(mean, precision=5)} target={target[0]:.5f} max|z|={z.max():.2f}")


def check_variance_bound(points=20, draws=4000, seed=0):
    rng = RngStream(seed)
    obj = qp_generate(25, 12, seed, noise_delta=5.0)
    k = boost_constants(obj.meta, 1.0)
    worst = 0.0
    for _ in range(points):
        x = rng.uniform01(25)
        D = boost_grad_draws(obj, x, 1.0, draws, rng)
        var = float(np.sum(D.var(axis=0, ddof=1)))
        worst = max(worst, var / k.sigma_gamma_sq)
    return Check("variance bound", worst <= 1.1, f"max var/sigma_gamma^2={worst:.4f} (limit 1.1)")


def _feasible_pairs(fset, count, rng):
    return [(fset.sample(rng), fset.sample(rng)) for _ in range(count)]


def check_key_inequality(pairs=1000, seed=0):
    rng = RngStream(seed)
    worst = np.inf
    qp = qp_generate(25, 12, seed, noise_delta=0.0)
    sc = SpecialCaseObjective(5, noise_delta=0.0)
    for obj, fset in ((qp, Polytope.from_problem(qp)), (sc, Cardinality(11, 5))):
        alpha = -math.expm1(-obj.meta.gamma)
        for x, y in _feasible_pairs(fset, pairs, rng):
            lhs = float((y - x) @ grad_F_ref(obj, x, obj.meta.gamma))
            rhs = alpha * obj.value(y) - obj.value(x)
            worst = min(worst, lhs - rhs)
    return Check("key inequality", worst >= -1e-6, f"min slack={worst:.3e} (>= -1e-6)")


def check_smoothness(pairs=1000, seed=0):
    rng = RngStream(seed)
    obj = qp_generate(25, 12, seed, noise_delta=0.0)
    Lg = boost_constants(obj.meta, 1.0).L_gamma
    worst = 0.0
    for _ in range(pairs):
        x, y = rng.uniform01(25), rng.uniform01(25)
        num = np.linalg.norm(grad_F_ref(obj, x, 1.0) - grad_F_ref(obj, y, 1.0))
        worst = max(worst, num / (Lg * np.linalg.norm(x - y)))
    return Check("smoothness", worst <= 1.0 + 1e-6, f"max ratio to L_gamma={worst:.4f}")


def check_boundedness(points=1000, seed=0, c=1.0):
    rng = RngStream(seed)
    obj = qp_generate(25, 12, seed, noise_delta=0.0)
    tau = boost_constants(obj.meta, c).tau
    worst = np.inf
    for _ in range(points):
        x = rng.uniform01(25)
        worst = min(worst, (1.0 + math.log(tau)) * (obj.value(x) + c) - value_F_ref(obj, x, 1.0))
    return Check("F boundedness", worst >= 0.0, f"min slack={worst:.4f} (tau={tau:.2f})")


def _oracle_invariants(fset, trials, rng):
    worst = {"idem": 0.0, "nonexp": 0.0, "member": 0.0, "obtuse": 0.0, "lmo": 0.0}
    scale = 2.0
    for _ in range(trials):
        y1 = rng.gaussian(fset.n) * scale
        y2 = rng.gaussian(fset.n) * scale
        p1, p2 = fset.project(y1), fset.project(y2)
        worst["idem"] = max(worst["idem"], float(np.linalg.norm(fset.project(p1) - p1)))
        worst["nonexp"] = max(worst["nonexp"], float(np.linalg.norm(p1 - p2) - np.linalg.norm(y1 - y2)))
        worst["member"] = max(worst["member"], fset.violation(p1))
        z = fset.sample(rng)
        worst["obtuse"] = max(worst["obtuse"], float(-((p1 - y1) @ (z - p1))))
        v = rng.gaussian(fset.n)
        s = fset.lmo(v)
        worst["lmo"] = max(worst["lmo"], float(v @ z - v @ s), fset.violation(s))
    ok = worst["idem"] <= 1e-9 and worst["nonexp"] <= 1e-9 and worst["member"] <= 1e-8
    ok = ok and worst["obtuse"] <= 1e-8 and worst["lmo"] <= 1e-8
    return ok, worst


def check_feasible_invariants(trials=300, seed=0):
    rng = RngStream(seed)
    qp = qp_generate(25, 12, seed)
    details, ok = [], True
    for fset in (Box(np.ones(6)), Cardinality(11, 5), Cardinality(7, 2.5), Polytope.from_problem(qp)):
        good, worst = _oracle_invariants(fset, trials, rng)
        ok &= good
        details.append(f"{fset!r}:" + ",".join(f"{k}={v:.1e}" for k, v in worst.items()))
    return Check("feasible oracle invariants", ok, "; ".join(details))


def check_structure(trials=500, seed=0):
    reports = {
        "qp": verify_structure(qp_generate(10, 5, seed, 0.0), 1.0, trials, rng=seed),
        "special_case": verify_structure(SpecialCaseObjective(3, 0.0), 1.0, trials, rng=seed),
    }
    ok = all(r.ok for r in reports.values())
    return Check("DR structure", ok, ", ".join(f"{k}: {len(r.violations)} violations" for k, r in reports.items()))


def check_online_causality(seed=0):
    T = 30
    objs = [qp_generate(6, 3, seed + t, 1.0) for t in range(T)]
    A = objs[0].A
    objs = [QuadraticObjective(o.H, A, o.b, o.u, 1.0) for o in objs]
    fset = Polytope(A, np.ones(3))
    sched = online.build_schedule("uniform", T, RngStream(seed), lo=1, hi=5)
    cfg = online.OnlineConfig(T=T, batch=2, grad_bound=10.0)
    base = online.run_obga(objs, fset, sched, cfg, RngStream(seed))
    again = online.run_obga(objs, fset, sched, cfg, RngStream(seed))
    same = np.array_equal(base.actions, again.actions)
    # shrink one delay and check the actions agree up to the new arrival round
    d = np.array(sched.d)
    u = int(np.argmax(d)) + 1
    d2 = d.copy()
    d2[u - 1] = 1
    sched2 = online.DelaySchedule.from_delays(d2)
    changed = online.run_obga(objs, fset, sched2, cfg, RngStream(seed))
    prefix_ok = np.array_equal(changed.actions[:u], base.actions[:u])
    conserved = all(
        len(s.dropped) + sum(len(b) for b in s.buckets) == s.T for s in (sched, sched2)
    )
    ok = same and prefix_ok and conserved
    return Check("online causality", ok, f"replay={same} prefix_until_round_{u}={prefix_ok} conservation={conserved}")


# numeric ------------------------------------------------------------------

def check_sampler(draws=1_000_000, seed=0):
    rng = RngStream(seed)
    p = rng.uniform01(draws)
    z = np.sort(1.0 + np.log1p(math.expm1(-1.0) * (1.0 - p)))
    cdf = (np.exp(z - 1.0) - math.exp(-1.0)) / (1.0 - math.exp(-1.0))
    i = np.arange(1, draws + 1)
    ks = float(max(np.max(i / draws - cdf), np.max(cdf - (i - 1) / draws)))
    median = boosting._z_from_uniform(1.0, 0.5)
    ok = ks < 0.002 and abs(median - 0.6201145069582775) < 1e-12
    return Check("Z sampler", ok, f"KS={ks:.5f} z(0.5)={median:.6f}")


def check_quadrature():
    obj = analytic_fixture(0.0)
    x = np.ones(2)
    g = grad_F_ref(obj, x, 1.0)
    v = value_F_ref(obj, x, 1.0)
    eg = float(np.max(np.abs(g - (1.0 - 2.0 * math.exp(-1.0)))))
    ev = abs(v - (2.0 - 3.0 * math.exp(-1.0)))
    z, w = gauss_legendre01(8)
    poly = abs(float(w @ z**15) - 1.0 / 16.0)
    ok = eg <= 1e-10 and ev <= 1e-10 and poly <= 1e-14
    return Check("quadrature", ok, f"|dgradF|={eg:.1e} |dF|={ev:.1e} degree-15 error={poly:.1e}")


def check_spectral_norm(trials=50, seed=0):
    rng = RngStream(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 30))
        M = rng.uniform(-1.0, 1.0, (n, n))
        M = M + M.T
        exact = float(np.max(np.abs(np.linalg.eigvalsh(M))))
        worst = max(worst, abs(spectral_norm(M) - exact) / exact)
    return Check("spectral norm", worst <= 1e-6, f"max relative error={worst:.1e}")


def brute_force_projection(y, A, b, u):
    """Enumerate active sets of at most ``n`` constraints (small n only)."""
    n = y.shape[0]
    C = np.vstack([A, np.eye(n), -np.eye(n)])
    d = np.concatenate([b, u, np.zeros(n)])
    best, best_dist = None, np.inf
    for size in range(0, n + 1):
        for rows in itertools.combinations(range(C.shape[0]), size):
            Ca = C[list(rows)]
            if size:
                G = Ca @ Ca.T
                if abs(np.linalg.det(G)) < 1e-12:
                    continue
                lam = np.linalg.solve(G, Ca @ y - d[list(rows)])
                if np.any(lam < -1e-12):
                    continue
                x = y - Ca.T @ lam
            else:
                x = y.copy()
            if np.all(C @ x <= d + 1e-10):
                dist = float(np.linalg.norm(x - y))
                if dist < best_dist:
                    best, best_dist = x, dist
    return best


def brute_force_lmo_value(v, A, b, u):
    """Best objective over all basic feasible solutions of ``{A s <= b, 0 <= s <= u}``."""
    n = v.shape[0]
    C = np.vstack([A, np.eye(n), -np.eye(n)])
    d = np.concatenate([b, u, np.zeros(n)])
    best = -np.inf
    for rows in itertools.combinations(range(C.shape[0]), n):
        Ca = C[list(rows)]
        if abs(np.linalg.det(Ca)) < 1e-12:
            continue
        s = np.linalg.solve(Ca, d[list(rows)])
        if np.all(C @ s <= d + 1e-9):
            best = max(best, float(v @ s))
    return best


def check_oracles_brute_force(instances=200, seed=0):
    rng = RngStream(seed)
    proj_err, lmo_err = 0.0, 0.0
    for _ in range(instances):
        n = 2
        m = int(rng.integers(1, 3))
        A = rng.uniform(0.0, 1.0, (m, n))
        b = rng.uniform(0.2, 1.0, m)
        u = rng.uniform(0.5, 1.5, n)
        y = rng.uniform(-1.0, 2.5, n)
        proj_err = max(proj_err, float(np.linalg.norm(project_polytope(y, A, b, u) - brute_force_projection(y, A, b, u))))
    for _ in range(instances):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        A = rng.uniform(0.0, 1.0, (m, n))
        b = rng.uniform(0.2, 1.0, m)
        u = rng.uniform(0.5, 1.5, n)
        v = rng.uniform(-1.0, 1.0, n)
        s = lmo_polytope(v, A, b, u)
        lmo_err = max(lmo_err, abs(float(v @ s) - brute_force_lmo_value(v, A, b, u)))
    ok = proj_err <= 1e-6 and lmo_err <= 1e-8
    return Check("oracle equivalence", ok, f"projection max err={proj_err:.1e}, LMO max gap={lmo_err:.1e}")


# experiments --------------------------------------------------------------

def check_local_max_escape(seeds=5, k=5, T=2000):
    noiseless = SpecialCaseObjective(k, 0.0)
    C = Cardinality(2 * k + 1, k)
    ga = offline.run_ga(noiseless, C, offline.OfflineConfig(T=T, start=noiseless.x_loc), RngStream(0)).final_value
    noisy = SpecialCaseObjective(k, 1.0)
    finals = [
        offline.run_bga(noisy, C, offline.OfflineConfig(T=T, start=noisy.x_loc), RngStream(s)).final_value
        for s in range(seeds)
    ]
    med = float(np.median(finals))
    ok = abs(ga - (k + 1)) <= 1e-6 and med >= 0.9 * (2 * k + 1)
    return Check("local-max escape (k=5)", ok, f"GA final={ga:.6f} (k+1={k + 1}); BGA(1) median={med:.4f} (>= {0.9 * (2 * k + 1):.1f})")


def _median_by(rows, label, t):
    return float(np.median([r.f_value for r in rows if r.solver == label and r.t == t]))


def check_offline_qp(config=None):
    from .config import load_config
    from .runner import run_experiment

    cfg = load_config(config or CONFIG_DIR / "offline_qp.json")
    res = run_experiment(cfg)
    T = max(r.t for r in res.rows)
    ga20, bga20 = _median_by(res.rows, "GA(1)", 20), _median_by(res.rows, "BGA(10)", 20)
    gaT, bgaT = _median_by(res.rows, "GA(1)", T), _median_by(res.rows, "BGA(10)", T)
    ok = res.ok and bga20 >= ga20 and bgaT >= 0.99 * gaT
    return Check("offline QP", ok, f"t=20 BGA(10)={bga20:.3f} GA={ga20:.3f}; final BGA(10)={bgaT:.3f} GA={gaT:.3f}")


def _final_regret(rows, label, t):
    return float(np.median([r.regret for r in rows if r.solver == label and r.t == t]))


def check_online_regret(configs=None):
    from .config import load_config
    from .runner import run_experiment

    configs = configs or [CONFIG_DIR / "online_qp_delayed.json", CONFIG_DIR / "online_qp_nodelay.json"]
    ok, parts = True, []
    for path in configs:
        cfg = load_config(path)
        res = run_experiment(cfg)
        T = cfg.online.horizon
        r = {lab: _final_regret(res.rows, lab, T) for lab in ("OBGA(10)", "OBGA(50)", "OGA(10)", "OGA(50)")}
        early = _final_regret(res.rows, "OBGA(50)", T // 4)
        sub = r["OBGA(50)"] / T < early / (T // 4)
        good = res.ok and r["OBGA(50)"] < r["OGA(50)"] and r["OBGA(10)"] < r["OGA(10)"] and sub
        ok &= good
        parts.append(f"{cfg.name}: " + " ".join(f"{k}={v:.1f}" for k, v in r.items()) + f" sublinear={sub}")
    return Check("online regret", ok, "; ".join(parts))


def _grid_opt(fvec, fset, step=1e-3):
    g = np.arange(0.0, 1.0 + step / 2, step)
    X = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    if isinstance(fset, Polytope):
        X = X[np.all(X @ fset.A.T <= fset.b + 1e-12, axis=1)]
    return float(np.max(fvec(X)))


def _fw_gap(fset, g, x):
    return float(g @ (fset.lmo(g) - x))


def _ascend_to_stationary(grad, fset, x, step, tol=1e-6, max_iter=20_000):
    for _ in range(max_iter):
        g = grad(x)
        if _fw_gap(fset, g, x) <= tol:
            return x, True
        x = fset.project(x + step * g)
    return x, _fw_gap(fset, grad(x), x) <= tol


def stationary_instances(seed=0):
    """Two-dimensional instances with a vectorized ``f`` for grid search."""
    qp = qp_generate(2, 1, seed, noise_delta=0.0)
    H, h = qp.H, qp.h
    yield "qp", qp, Polytope.from_problem(qp), lambda X: 0.5 * np.einsum("ij,jk,ik->i", X, H, X) + X @ h
    # f = x1 + x2 + x1 x2 has gradient ratios >= 1/2 on the unit box: gamma = 1/2
    meta = ObjectiveMeta(n=2, a=np.ones(2), L=1.0, gamma=0.5)
    bil = FunctionObjective(
        lambda x: x[0] + x[1] + x[0] * x[1], lambda x: np.array([1.0 + x[1], 1.0 + x[0]]), meta
    )
    yield "bilinear", bil, Polytope(np.array([[1.0, 0.6]]), np.array([1.0])), \
        lambda X: X[:, 0] + X[:, 1] + X[:, 0] * X[:, 1]


def check_stationary_ratios(seed=0, starts=4):
    parts, ok = [], True
    for name, obj, fset, fvec in stationary_instances(seed):
        opt = _grid_opt(fvec, fset)
        gamma = obj.meta.gamma
        Lg = boost_constants(obj.meta, 1.0).L_gamma
        worst_F, worst_f = np.inf, np.inf
        for s in range(starts):
            trace = offline.run_bga(obj, fset, offline.OfflineConfig(T=300), RngStream(seed + s))
            x, conv = _ascend_to_stationary(
                lambda z: grad_F_ref(obj, z, gamma), fset, trace.iterates[-1], 1.0 / Lg
            )
            ok &= conv
            worst_F = min(worst_F, obj.value(x) - (-math.expm1(-gamma) * opt - 1e-3))
            start = fset.project(RngStream(seed + 100 + s).uniform01(2))
            y, conv = _ascend_to_stationary(obj.grad, fset, start, 1.0 / obj.meta.L)
            ok &= conv
            worst_f = min(worst_f, obj.value(y) - (gamma**2 / (1 + gamma**2) * opt - 1e-3))
        ok &= worst_F >= 0 and worst_f >= 0
        parts.append(f"{name}(gamma={gamma}): OPT={opt:.4f} slack F-stat={worst_F:.4f} f-stat={worst_f:.4f}")
    return Check("stationary-point ratios", ok, "; ".join(parts))


def check_determinism(config=None):
    from .config import load_config
    from .runner import rows_to_csv, run_experiment

    cfg = load_config(config or CONFIG_DIR / "smoke.json")

    def masked():
        text = rows_to_csv(run_experiment(cfg).rows)
        return "\n".join(line.rsplit(",", 1)[0] for line in text.splitlines())

    a, b = masked(), masked()
    return Check("determinism", a == b, f"{len(a.splitlines())} lines compared, identical={a == b}")


SUITES = {
    "core": [
        check_unbiasedness, check_variance_bound, check_key_inequality, check_smoothness,
        check_boundedness, check_feasible_invariants, check_structure, check_online_causality,
    ],
    "numeric": [check_sampler, check_quadrature, check_spectral_norm, check_oracles_brute_force],
    "experiments": [check_local_max_escape, check_offline_qp, check_online_regret, check_stationary_ratios, check_determinism],
}


def run_suite(name, out=print):
    if name == "all":
        checks = [c for key in ("core", "numeric", "experiments") for c in SUITES[key]]
    elif name in SUITES:
        checks = SUITES[name]
    else:
        raise ValueError(f"unknown suite {name!r}")
    results = []
    for fn in checks:
        try:
            result = _timed(fn)
        except Exception as err:
            result = Check(fn.__name__.removeprefix("check_"), False, f"raised {type(err).__name__}: {err}")
        out(result.line())
        results.append(result)
    return results
