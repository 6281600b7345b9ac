"""Bayesian-optimization driver, baselines, configs and result tables."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.linalg import solve_triangular

from . import bench as bench_mod
from .acq import encode
from .gbdt import GbdtConfig, train
from .propose import ProjectionFailed, midpoint, project
from .solver import INFEASIBLE, SolveOptions, solve
from .space import ConstraintSet, Dataset, Feature, FeatureSpace, PolyConstraint, sample_uniform
from .tkgp import KernelBounds, build_posterior, fit_hyperparams, standardize

ALGORITHMS = ("leaf-gp", "leaf-gp-rnd", "feas-random")
MAX_EXCLUSIONS = 10
INIT_ATTEMPTS = 1000
RND_SAMPLES = 2000


class ConfigError(ValueError):
    pass


class NoFeasibleSample(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    benchmark: str
    n_init: int = 5
    n_iter: int = 60
    seed: int = 101
    kappa: float = 1.96
    gbdt: GbdtConfig = GbdtConfig()
    kernel_bounds: KernelBounds = KernelBounds()
    solver: SolveOptions = SolveOptions()
    algorithm: str = "leaf-gp"
    penalty_lambda: float | None = None

    def __post_init__(self):
        if self.n_init < 2 or self.n_init < 2 * self.gbdt.min_data_in_leaf:
            raise ConfigError("n_init must be at least 2 and at least twice min_data_in_leaf")
        if self.n_iter < 0:
            raise ConfigError("n_iter must be non-negative")
        if self.kappa < 0:
            raise ConfigError("kappa must be non-negative")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        if self.penalty_lambda is not None and not self.penalty_lambda > 0:
            raise ConfigError("penalty_lambda must be positive")


_NESTED = {"gbdt": GbdtConfig, "kernel_bounds": KernelBounds, "solver": SolveOptions}


def config_from_dict(d: dict) -> RunConfig:
    """Build a RunConfig from plain data, rejecting unknown keys at every level."""
    known = {f.name for f in fields(RunConfig)}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    kw = dict(d)
    for key, cls in _NESTED.items():
        if key in kw:
            sub = kw[key]
            if not isinstance(sub, dict):
                raise ConfigError(f"{key} must be a mapping")
            sub_known = {f.name for f in fields(cls)}
            bad = set(sub) - sub_known
            if bad:
                raise ConfigError(f"unknown {key} keys: {sorted(bad)}")
            if cls is KernelBounds:
                sub = {k: tuple(v) for k, v in sub.items()}
            try:
                kw[key] = cls(**sub)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"bad {key}: {e}") from None
    if "benchmark" not in kw:
        raise ConfigError("config needs a benchmark")
    try:
        return RunConfig(**kw)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def config_to_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["kernel_bounds"] = {k: list(v) for k, v in d["kernel_bounds"].items()}
    return d


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


# --- problem files ---------------------------------------------------------------------

def problem_from_dict(d: dict):
    """``(FeatureSpace, ConstraintSet)`` from plain data.

    Schema::

        {"features": [{"kind": "continuous", "lb": 0, "ub": 1},
                      {"kind": "integer", "lb": 1, "ub": 9},
                      {"kind": "categorical", "categories": ["a", "b"]}],
         "constraints": [{"sense": "le", "name": "c1",
                          "terms": [[1.0, [[0, 1]]], [-1.0, []]]}],
         "eq_tolerance": 1e-6}
    """
    allowed = {"features", "constraints", "eq_tolerance"}
    if set(d) - allowed:
        raise ConfigError(f"unknown problem keys: {sorted(set(d) - allowed)}")
    feats = []
    for f in d["features"]:
        kind = f.get("kind")
        if kind == "categorical":
            feats.append(Feature.categorical(f["categories"]))
        elif kind == "integer":
            feats.append(Feature.integer(f["lb"], f["ub"]))
        elif kind == "continuous":
            feats.append(Feature.continuous(f["lb"], f["ub"]))
        else:
            raise ConfigError(f"unknown feature kind {kind!r}")
    space = FeatureSpace(feats)
    cons = [PolyConstraint([(c, [tuple(m) for m in mono]) for c, mono in item["terms"]],
                           item.get("sense", "le"), item.get("name", ""))
            for item in d.get("constraints", [])]
    cs = ConstraintSet.from_list(cons, d.get("eq_tolerance", 1e-6))
    cs.check_space(space)
    return space, cs


def problem_to_dict(space: FeatureSpace, cons: ConstraintSet) -> dict:
    feats = []
    for f in space.features:
        if f.is_cat:
            feats.append({"kind": "categorical", "categories": list(f.categories)})
        else:
            feats.append({"kind": f.kind, "lb": float(f.lb), "ub": float(f.ub)})
    items = [{"sense": c.sense, "name": c.name, "terms": [[coef, [list(m) for m in mono]] for coef, mono in c.terms]}
             for c in cons.inequalities + cons.equalities]
    return {"features": feats, "constraints": items, "eq_tolerance": cons.eq_tolerance}


def load_problem(path):
    with open(path) as fh:
        return problem_from_dict(json.load(fh))


# --- history ---------------------------------------------------------------------

@dataclass
class Step:
    iter: int
    x: np.ndarray
    objective: float
    feasible: bool
    best_feasible: float
    status: str = "none"
    gap: float = math.nan
    solve_ms: float = 0.0


@dataclass
class History:
    seed: int
    init: list = field(default_factory=list)    # Step rows of the initial design (iter 0)
    steps: list = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    @property
    def initial_best(self):
        return self.init[-1].best_feasible if self.init else -math.inf

    def best_curve(self):
        return np.array([s.best_feasible for s in self.steps])


def _best(prev, obj, feas):
    return max(prev, obj) if feas else prev


def _fmt(v):
    return repr(float(v))


def history_header(n):
    return ["seed", "iter"] + [f"x_{i}" for i in range(n)] + \
        ["objective", "feasible", "best_feasible", "status", "gap", "solve_ms"]


def write_history(histories, stream, n=None):
    """Write one or more histories as CSV; initial-design rows carry iter 0."""
    histories = [histories] if isinstance(histories, History) else list(histories)
    if n is None:
        first = next((s for h in histories for s in h.init + h.steps), None)
        n = 0 if first is None else len(first.x)
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(history_header(n))
    for h in histories:
        for s in h.init + h.steps:
            w.writerow([h.seed, s.iter] + [_fmt(v) for v in s.x] +
                       [_fmt(s.objective), int(s.feasible), _fmt(s.best_feasible), s.status,
                        _fmt(s.gap), f"{s.solve_ms:.3f}"])


def history_csv(histories) -> str:
    buf = io.StringIO()
    write_history(histories, buf)
    return buf.getvalue()


def read_history(stream) -> list:
    rows = list(csv.reader(stream))
    header = rows[0]
    n = sum(1 for c in header if c.startswith("x_"))
    if header != history_header(n):
        raise ValueError("not a history CSV (header mismatch)")
    out = {}
    for r in rows[1:]:
        seed = int(r[0])
        h = out.setdefault(seed, History(seed))
        s = Step(int(r[1]), np.array([float(v) for v in r[2:2 + n]]), float(r[2 + n]), r[3 + n] == "1",
                 float(r[4 + n]), r[5 + n], float(r[6 + n]), float(r[7 + n]))
        (h.init if s.iter == 0 else h.steps).append(s)
    return list(out.values())


# --- building blocks -----------------------------------------------------------------

def penalty(objective_value, g_values, h_values, lam):
    """Objective minus ``lam`` times the squared constraint violation."""
    g = np.maximum(np.asarray(g_values, dtype=float), 0.0)
    h = np.asarray(h_values, dtype=float)
    return float(objective_value - lam * (np.sum(g ** 2) + np.sum(h ** 2)))


def _project_full(problem, x, rng):
    return project(x, problem.space.full_box(), problem.constraints, rng=rng).x


def initialize(problem, n_init: int, rng) -> Dataset:
    """``n_init`` uniform draws, each projected onto the feasible set."""
    X = []
    for _ in range(n_init):
        for attempt in range(INIT_ATTEMPTS):
            x = sample_uniform(problem.space, rng)
            try:
                X.append(_project_full(problem, x, rng))
                break
            except ProjectionFailed:
                continue
        else:
            raise ProjectionFailed(f"no feasible initial point after {INIT_ATTEMPTS} attempts")
    X = np.array(X)
    return Dataset(X, np.array([problem(x) for x in X]))


def feas_random_step(problem, rng):
    return _project_full(problem, sample_uniform(problem.space, rng), rng)


def _ucb_many(post, kappa, X):
    k = post.k_vector(X)
    mu = k @ post.alpha
    s0 = post.params.sigma0_sq
    v = solve_triangular(post.chol, k.T, lower=True)
    var = np.clip(s0 - np.sum(v * v, axis=0), 0.0, s0)
    return mu + kappa * np.sqrt(var)


def rnd_acquisition(post, kappa, space, constraints, n_samples: int = RND_SAMPLES, rng=None):
    """Best pointwise UCB among uniform draws; infeasible draws are dropped."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    X = sample_uniform(space, rng, n_samples)
    if constraints:
        keep = np.array([constraints.is_feasible(x) for x in X])
        X = X[keep]
        if not len(X):
            raise NoFeasibleSample("every random draw violates the constraints")
    vals = _ucb_many(post, kappa, X)
    return X[int(np.argmax(vals))]


def _train_targets(problem, data, cfg):
    if cfg.penalty_lambda is None or not problem.constraints:
        return data.y
    out = []
    for x, y in zip(data.X, data.y):
        g, h = problem.constraints.values(x)
        out.append(penalty(y, g, h, cfg.penalty_lambda))
    return np.array(out)


def _surrogate(problem, data, cfg):
    y = _train_targets(problem, data, cfg)
    y_std = standardize(y)[0]
    ens = train(Dataset(data.X, y_std), problem.space, cfg.gbdt)
    params = fit_hyperparams(ens, data.X, y_std, cfg.kernel_bounds)
    return build_posterior(ens, params, Dataset(data.X, y))


def leaf_gp_step(problem, data, cfg, rng):
    """One LEAF-GP proposal: ``(x, status, gap)``."""
    post = _surrogate(problem, data, cfg)
    p = encode(post, cfg.kappa, problem.constraints)
    excluded = set()
    while True:
        sol = solve(p, cfg.solver, rng, exclude=excluded)
        if sol.status == INFEASIBLE:
            raise RuntimeError(f"acquisition problem infeasible at iteration with {data.m} points "
                               f"({len(excluded)} cells excluded)")
        x_mid = midpoint(sol, rng)
        try:
            prop = project(x_mid, sol, problem.constraints, rng=rng)
            return prop.x, sol.status, sol.gap
        except ProjectionFailed:
            excluded.add(sol.leaves)
            if len(excluded) > MAX_EXCLUSIONS:
                raise RuntimeError("projection failed on too many optimal cells") from None


def run_bo(cfg: RunConfig, problem=None) -> History:
    problem = problem or bench_mod.get(cfg.benchmark)
    rng = np.random.default_rng(cfg.seed)
    data = initialize(problem, cfg.n_init, rng)
    hist = History(cfg.seed)
    best = -math.inf
    for x, y in zip(data.X, data.y):
        feas = problem.constraints.is_feasible(x) if problem.constraints else True
        best = _best(best, y, feas)
        hist.init.append(Step(0, x, float(y), feas, best, "init"))
    for it in range(1, cfg.n_iter + 1):
        t0 = time.perf_counter()
        status, gap = "none", math.nan
        if cfg.algorithm == "leaf-gp":
            x, status, gap = leaf_gp_step(problem, data, cfg, rng)
        elif cfg.algorithm == "leaf-gp-rnd":
            post = _surrogate(problem, data, cfg)
            cons = problem.constraints if cfg.penalty_lambda is None else ConstraintSet()
            x = rnd_acquisition(post, cfg.kappa, problem.space, cons, RND_SAMPLES, rng)
            status = "sampled"
        else:
            x = feas_random_step(problem, rng)
        ms = 1000.0 * (time.perf_counter() - t0)
        y = problem(x)
        feas = problem.constraints.is_feasible(x) if problem.constraints else True
        best = _best(best, y, feas)
        hist.steps.append(Step(it, x, y, feas, best, status, gap, ms))
        data = data.append(x, y)
    return hist


def aggregate(histories):
    """Per-iteration median and quartiles of the best feasible value.

    Row 0 summarizes the initial designs.  Quantiles use linear
    interpolation between order statistics.
    """
    histories = list(histories)
    if not histories:
        return []
    lengths = {len(h) for h in histories}
    if len(lengths) != 1:
        raise ValueError("histories must have equal lengths")
    n = lengths.pop()
    curves = np.array([[h.initial_best] + [s.best_feasible for s in h.steps] for h in histories])
    rows = []
    for i in range(n + 1):
        col = curves[:, i]
        q1, med, q3 = np.quantile(col, [0.25, 0.5, 0.75], method="linear")
        rows.append((i, float(med), float(q1), float(q3), len(histories)))
    return rows


def write_aggregate(rows, stream):
    stream.write("# quantiles: linear interpolation between order statistics\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["iter", "median", "q1", "q3", "n_runs"])
    for it, med, q1, q3, n in rows:
        w.writerow([it, _fmt(med), _fmt(q1), _fmt(q3), n])
