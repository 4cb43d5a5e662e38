"""Best-of-k metrics, budgeted tuning, rate fits and the benchmark driver."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import gammaln

from .baselines import LFMSGDConfig, SubgradConfig, lfmsgd_run, random_starts, subgrad_run
from .corpus import ObjectiveSpec, lookup, rescale_to_hypercube, wrap_barrier
from .engine import DESK_POINTS, QHDConfig, RunTrace, Schedule, evolve, schedule_from_document
from .grid import GridSpec, ProbabilityField

__all__ = [
    "InsufficientRuns",
    "EmptyWindow",
    "TooFewPoints",
    "MCEstimate",
    "FitResult",
    "TuneResult",
    "BestOfKReport",
    "BenchSettings",
    "best_of_k_exact",
    "best_of_k_mc",
    "best_of_k_mc_many",
    "resolution_floor",
    "tune_scalar",
    "tune_parameter",
    "fit_convergence",
    "pre_plateau_window",
    "fit_plateau_vs_h",
    "study_step_sizes",
    "run_suite",
    "ALGORITHMS",
]

ALGORITHMS = ("QHD", "Subgrad", "LFMSGD")
PARAMETER = {"QHD": "L", "Subgrad": "eta", "LFMSGD": "sigma"}
DEFAULT_RANGES = {"QHD": (0.5, 20.0, False), "Subgrad": (1e-3, 1e2, True), "LFMSGD": (1e-3, 1e1, True)}
DEFAULT_K = (1, 3, 10, 30, 100)


class InsufficientRuns(ValueError):
    """Fewer runs than the requested k."""


class EmptyWindow(ValueError):
    """Fit window holds fewer than five usable points."""


class TooFewPoints(ValueError):
    """Fewer than three step sizes for a plateau fit."""


def canonical_algorithm(name: str) -> str:
    for a in ALGORITHMS:
        if a.lower() == str(name).lower():
            return a
    raise ValueError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")


# ---------------------------------------------------------------------------
# best-of-k


def best_of_k_exact(
    field: ProbabilityField, objective, f_min: float, k: int, values: np.ndarray | None = None
) -> float:
    """E[min of k i.i.d. draws from ``field``] - f_min via order statistics."""
    if k < 1:
        raise ValueError("k must be >= 1")
    vals = objective.values(field.grid.points()) if values is None else values
    vals = np.asarray(vals, dtype=float).ravel()
    mass = np.asarray(field.mass, dtype=float).ravel()
    order = np.argsort(vals, kind="stable")
    v, m = vals[order], mass[order]
    surv = np.cumsum(m[::-1])[::-1]
    surv = surv / surv[0]
    nxt = np.append(surv[1:], 0.0)
    return float(np.sum(v * (surv**k - nxt**k)) - f_min)


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    stderr: float
    k: int
    resamples: int

    def __iter__(self):
        yield self.estimate
        yield self.stderr


def _log_comb(n, r):
    return gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1)


def _order_weights(n: int, k: int) -> np.ndarray:
    """P(the j-th smallest of n is the min of a uniform k-subset), j = 1..n."""
    j = np.arange(1, n + 1)
    ok = n - j >= k - 1
    w = np.zeros(n)
    w[ok] = np.exp(_log_comb(n - j[ok], k - 1) - _log_comb(n, k))
    return w


def _jackknife_var(sorted_vals: np.ndarray, k: int) -> float:
    """Jackknife variance of the all-subsets min-of-k U-statistic."""
    n = sorted_vals.size
    if k > n - 1 or n < 2 or sorted_vals[0] == sorted_vals[-1]:
        return 0.0
    w = _order_weights(n - 1, k)  # ranks 1..n-1 in a reduced sample
    v = sorted_vals
    head = np.concatenate([[0.0], np.cumsum(v[:-1] * w)])  # sum_{j<r} v_j w_j
    tail_terms = v[1:] * w  # element j+1 moves to rank j
    tail = np.concatenate([np.cumsum(tail_terms[::-1])[::-1], [0.0]])
    loo = head + tail
    return float((n - 1) / n * np.sum((loo - loo.mean()) ** 2))


def best_of_k_mc_many(
    values: Sequence[float] | np.ndarray,
    f_min: float,
    k_values: Iterable[int],
    resamples: int = 10_000,
    rng_seed: int = 0,
) -> dict[int, MCEstimate]:
    """Monte Carlo best-of-k for several k from shared nested subsets.

    Each resample is a uniformly random ordered subset of size max(k); its
    first k entries are a uniform k-subset, so estimates are nonincreasing in
    k.  The standard error combines resampling noise with the jackknife
    variance of the underlying all-subsets statistic.
    """
    v = np.asarray(values, dtype=float).ravel()
    ks = sorted({int(k) for k in k_values})
    n = v.size
    if not ks or ks[0] < 1:
        raise ValueError("k must be >= 1")
    if ks[-1] > n:
        raise InsufficientRuns(f"need at least {ks[-1]} runs, got {n}")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    kmax = ks[-1]
    rng = np.random.default_rng(rng_seed)
    per_perm = n // kmax
    n_perm = -(-resamples // per_perm)
    perms = rng.permuted(np.tile(np.arange(n), (n_perm, 1)), axis=1)
    blocks = perms[:, : per_perm * kmax].reshape(-1, kmax)[:resamples]
    running = np.minimum.accumulate(v[blocks], axis=1)
    sorted_vals = np.sort(v)
    out = {}
    for k in ks:
        mins = running[:, k - 1]
        rs_var = mins.var(ddof=1) / resamples if resamples > 1 and mins.min() < mins.max() else 0.0
        se = math.sqrt(max(rs_var, 0.0) + _jackknife_var(sorted_vals, k))
        out[k] = MCEstimate(float(mins.mean() - f_min), se, k, resamples)
    return out


def best_of_k_mc(
    run_solutions,
    objective,
    f_min: float,
    k: int,
    resamples: int = 10_000,
    rng_seed: int = 0,
    values: np.ndarray | None = None,
) -> MCEstimate:
    """Monte Carlo best-of-k over the final iterates of independent runs."""
    if values is None:
        values = objective.values(np.asarray(run_solutions, dtype=float))
    return best_of_k_mc_many(values, f_min, [k], resamples, rng_seed)[int(k)]


def resolution_floor(objective, grid: GridSpec) -> float:
    """Smallest gap visible on the grid: min over grid points of f, minus f*."""
    return float(np.min(objective.values(grid.points())) - objective.known_min_value)


# ---------------------------------------------------------------------------
# tuning


@dataclass
class TuneResult:
    best: float
    best_gap: float
    trace: list[tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"best": self.best, "best_gap": self.best_gap, "trace": [list(p) for p in self.trace]}


def tune_scalar(
    fn: Callable[[float], float],
    low: float,
    high: float,
    budget: int = 100,
    log_scale: bool = False,
    rng_seed: int = 0,
    map_fn: Callable = map,
) -> TuneResult:
    """Random search followed by rounds in a shrinking interval.

    60% of the budget goes to uniform probes over the range; the rest is
    spent in rounds of ten probes around the incumbent, halving the interval
    each round.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    if not high > low or (log_scale and low <= 0):
        raise ValueError("bad search range")
    a, b = (math.log(low), math.log(high)) if log_scale else (float(low), float(high))
    to_param = (lambda u: float(math.exp(u))) if log_scale else float
    rng = np.random.default_rng(rng_seed)
    trace: list[tuple[float, float]] = []

    def run(us):
        params = [min(max(to_param(u), low), high) for u in us]
        for p, g in zip(params, map_fn(fn, params)):
            trace.append((p, float(g)))

    n_random = max(1, int(round(0.6 * budget)))
    run(rng.uniform(a, b, n_random))
    remaining = budget - n_random
    half = (b - a) / 8.0
    while remaining > 0:
        batch = min(10, remaining)
        best_p = min(trace, key=lambda r: r[1])[0]
        centre = math.log(best_p) if log_scale else best_p
        lo, hi = max(a, centre - half), min(b, centre + half)
        run(rng.uniform(lo, hi, batch))
        remaining -= batch
        half /= 2.0
    best_p, best_g = min(trace, key=lambda r: r[1])
    return TuneResult(best_p, best_g, trace)


@dataclass(frozen=True)
class BenchSettings:
    """Scale knobs shared by every benchmark entry."""

    N: int | None = None
    T: float = 10.0
    h: float = 1e-3
    schedule: Any = "C"
    t_start: float | None = None
    initial_state: str = "uniform"
    growth_rate: float = 1e3
    budget: int = 10_000
    runs: int = 10_000
    tune_runs: int = 1_000
    resamples: int = 10_000
    tune_budget: int = 100
    seed: int = 0
    step_schedule: str = "sqrt_decay"
    beta: float = 0.9

    @classmethod
    def from_mapping(cls, doc: Mapping[str, Any] | None) -> "BenchSettings":
        doc = dict(doc or {})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown settings {sorted(unknown)}")
        return cls(**doc)

    def points(self, dim: int) -> int:
        return int(self.N) if self.N is not None else DESK_POINTS[dim]

    def schedule_obj(self) -> Schedule:
        return schedule_from_document(self.schedule)


def qhd_config(spec: ObjectiveSpec, L: float, settings: BenchSettings) -> QHDConfig:
    grid = GridSpec(spec.dim, settings.points(spec.dim), float(L))
    return QHDConfig(
        grid=grid,
        schedule=settings.schedule_obj(),
        h=settings.h,
        iterations=int(round(settings.T / settings.h)),
        objective=wrap_barrier(rescale_to_hypercube(spec, L), settings.growth_rate),
        t_start=settings.t_start,
        initial_state=settings.initial_state,
        rng_seed=settings.seed,
    )


@dataclass
class _Outcome:
    """Everything needed to score one parameter value for any k."""

    algorithm: str
    parameter: float
    gaps: dict[int, float]
    stderr: dict[int, float]
    resolution_floor: float | None = None
    trace: RunTrace | None = None


def evaluate_parameter(
    algorithm: str,
    function: str,
    theta: float,
    settings: BenchSettings,
    k_values: Sequence[int],
    runs: int | None = None,
    keep_trace: bool = False,
) -> _Outcome:
    """Run one algorithm at one hyperparameter value and score it for every k."""
    algorithm = canonical_algorithm(algorithm)
    spec = lookup(function)
    f_min = spec.known_min_value
    if algorithm == "QHD":
        cfg = qhd_config(spec, theta, settings)
        trace = evolve(cfg)
        vals = cfg.objective.values(cfg.grid.points())
        gaps = {k: best_of_k_exact(trace.final_field, None, f_min, k, values=vals) for k in k_values}
        floor = float(np.min(vals) - f_min)
        return _Outcome(algorithm, theta, gaps, {k: 0.0 for k in k_values}, floor, trace if keep_trace else None)
    runs = settings.runs if runs is None else runs
    starts = random_starts(spec, runs, settings.seed)
    if algorithm == "Subgrad":
        res = subgrad_run(spec, SubgradConfig(settings.step_schedule, theta, settings.budget, starts))
    else:
        res = lfmsgd_run(
            spec,
            LFMSGDConfig(sigma=theta, beta=settings.beta, budget=settings.budget, x0=starts, rng_seed=settings.seed),
        )
    est = best_of_k_mc_many(res.value, f_min, k_values, settings.resamples, settings.seed)
    return _Outcome(
        algorithm, theta, {k: e.estimate for k, e in est.items()}, {k: e.stderr for k, e in est.items()}
    )


class _Probe:
    """Picklable gap function for the tuner, memoized per parameter value."""

    def __init__(self, algorithm, function, settings, k, k_values, runs, cache):
        self.algorithm, self.function, self.settings = algorithm, function, settings
        self.k, self.k_values, self.runs = k, tuple(k_values), runs
        self.cache = cache

    def outcome(self, theta: float) -> _Outcome:
        if theta not in self.cache:
            self.cache[theta] = evaluate_parameter(
                self.algorithm, self.function, theta, self.settings, self.k_values, runs=self.runs
            )
        return self.cache[theta]

    def __call__(self, theta: float) -> float:
        return self.outcome(theta).gaps[self.k]


def tune_parameter(
    algorithm: str,
    function: str,
    k: int,
    budget: int = 100,
    search_range: tuple[float, float] | None = None,
    rng_seed: int = 0,
    settings: BenchSettings | None = None,
    cache: dict | None = None,
    log_scale: bool | None = None,
) -> TuneResult:
    """Tune L (QHD), eta (Subgrad) or sigma (LFMSGD) for the best-of-k gap."""
    algorithm = canonical_algorithm(algorithm)
    settings = settings or BenchSettings()
    lo, hi, log_default = DEFAULT_RANGES[algorithm]
    if search_range is not None:
        lo, hi = search_range
    probe = _Probe(
        algorithm,
        function,
        settings,
        k,
        sorted(set(DEFAULT_K) | {k}),
        settings.tune_runs,
        {} if cache is None else cache,
    )
    return tune_scalar(probe, lo, hi, budget, log_default if log_scale is None else log_scale, rng_seed)


# ---------------------------------------------------------------------------
# convergence fits


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    window: tuple[float, float]
    residual: float
    model: str
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)


def _xy(trace) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(trace, RunTrace):
        return trace.kh.astype(float), trace.gap.astype(float)
    x, y = trace
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def pre_plateau_window(trace, kinetic_drop: float = 0.9, plateau_factor: float = 3.0) -> tuple[float, float]:
    """From the end of the kinetic phase to the approach of the plateau.

    Starts at the first point where the gap fell below ``kinetic_drop`` times
    its initial value and stops at the first point within ``plateau_factor``
    of the terminal gap.
    """
    x, g = _xy(trace)
    if g.size == 0:
        raise EmptyWindow("empty trace")
    start_ref = trace.initial_expected_f - trace.f_min if isinstance(trace, RunTrace) else g[0]
    below = np.flatnonzero(g <= kinetic_drop * start_ref)
    near = np.flatnonzero(g <= plateau_factor * g[-1])
    if below.size == 0 or near.size == 0 or x[near[0]] <= x[below[0]]:
        raise EmptyWindow("no pre-plateau window")
    return float(x[below[0]]), float(x[near[0]])


def fit_convergence(trace, model: str = "power_law", fit_window="auto") -> FitResult:
    """Least-squares fit of log gap against log(kh) or kh."""
    if model not in ("power_law", "exponential"):
        raise ValueError("model must be power_law or exponential")
    x, g = _xy(trace)
    window = pre_plateau_window(trace) if fit_window == "auto" else tuple(map(float, fit_window))
    mask = (x >= window[0]) & (x <= window[1]) & (g > 0) & np.isfinite(g)
    if mask.sum() < 5:
        raise EmptyWindow(f"fit window {window} holds {int(mask.sum())} usable points")
    xs = np.log(x[mask]) if model == "power_law" else x[mask]
    ys = np.log(g[mask])
    (slope, intercept), res, *_ = np.polyfit(xs, ys, 1, full=True)
    rms = float(np.sqrt(res[0] / mask.sum())) if res.size else 0.0
    return FitResult(float(slope), float(intercept), window, rms, model, int(mask.sum()))


def fit_plateau_vs_h(terminal_gaps: Sequence[tuple[float, float]]) -> FitResult:
    """Log-log slope of terminal gap against step size."""
    pts = [(float(h), float(g)) for h, g in terminal_gaps]
    if len(pts) < 3:
        raise TooFewPoints("need at least three step sizes")
    hs, gs = np.array(pts).T
    if np.any(hs <= 0) or np.any(gs <= 0):
        raise ValueError("step sizes and gaps must be positive")
    (slope, intercept), res, *_ = np.polyfit(np.log(hs), np.log(gs), 1, full=True)
    rms = float(np.sqrt(res[0] / len(hs))) if res.size else 0.0
    return FitResult(float(slope), float(intercept), (float(hs.min()), float(hs.max())), rms, "power_law", len(hs))


@dataclass
class StudyResult:
    function: str
    h_values: list[float]
    terminal_gaps: list[float]
    plateau_fit: FitResult
    rate_fits: list[FitResult | None]
    traces: list[RunTrace] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "h": self.h_values,
            "terminal_gap": self.terminal_gaps,
            "plateau_fit": self.plateau_fit.to_dict(),
            "rate_fits": [None if f is None else f.to_dict() for f in self.rate_fits],
        }


def study_step_sizes(
    function: str,
    h_values: Sequence[float],
    schedule: Schedule | None = None,
    N: int = 2048,
    L: float = 1.0,
    T: float = 20.0,
    t_start: float | None = None,
    initial_state: str = "uniform",
    rate_model: str = "power_law",
) -> StudyResult:
    """Run QHD for several step sizes; fit plateau-vs-h and per-h rates."""
    spec = lookup(function)
    schedule = schedule or Schedule.convex()
    gaps, fits, traces = [], [], []
    for h in h_values:
        cfg = QHDConfig(
            GridSpec(spec.dim, N, L),
            schedule,
            float(h),
            int(round(T / h)),
            wrap_barrier(rescale_to_hypercube(spec, L)),
            t_start=t_start,
            initial_state=initial_state,
        )
        tr = evolve(cfg)
        traces.append(tr)
        gaps.append(tr.terminal_gap)
        try:
            fits.append(fit_convergence(tr, rate_model))
        except EmptyWindow:
            fits.append(None)
    return StudyResult(spec.name, [float(h) for h in h_values], gaps, fit_plateau_vs_h(zip(h_values, gaps)), fits, traces)


# ---------------------------------------------------------------------------
# suite driver


@dataclass
class BestOfKReport:
    function: str
    algorithm: str
    k_values: tuple[int, ...]
    gaps: dict[int, float]
    stderr: dict[int, float]
    parameter_name: str
    parameters: dict[int, float]
    tuning: dict[int, TuneResult] = field(default_factory=dict)
    resolution_floor: float | None = None
    traces: dict[float, RunTrace] = field(default_factory=dict, repr=False)

    def rows(self) -> list[dict]:
        return [
            {
                "function": self.function,
                "algorithm": self.algorithm,
                "k": k,
                "gap": self.gaps[k],
                "stderr": self.stderr[k],
                "parameter_name": self.parameter_name,
                "parameter": self.parameters[k],
                "resolution_floor": "" if self.resolution_floor is None else self.resolution_floor,
            }
            for k in self.k_values
        ]

    def to_dict(self) -> dict:
        return {
            "function": self.function,
            "algorithm": self.algorithm,
            "k_values": list(self.k_values),
            "gaps": {str(k): v for k, v in self.gaps.items()},
            "stderr": {str(k): v for k, v in self.stderr.items()},
            "parameter_name": self.parameter_name,
            "parameters": {str(k): v for k, v in self.parameters.items()},
            "resolution_floor": self.resolution_floor,
            "tuning": {str(k): t.to_dict() for k, t in self.tuning.items()},
        }


def run_entry(entry: Mapping[str, Any], base: BenchSettings) -> BestOfKReport:
    """Tune per k, then evaluate every tuned value at full fidelity.

    The reported parameter for each k is the best of the tuned candidates at
    that k, which keeps the gaps nonincreasing in k.
    """
    function = lookup(str(entry["function"])).name
    algorithm = canonical_algorithm(entry["algorithm"])
    k_values = tuple(sorted(int(k) for k in entry.get("k_values", DEFAULT_K)))
    overrides = dict(entry.get("overrides", {}))
    pname = PARAMETER[algorithm]
    fixed = overrides.pop(pname, None)
    search_range = overrides.pop("search_range", None)
    settings = replace(base, **overrides) if overrides else base
    tuning: dict[int, TuneResult] = {}
    if fixed is not None:
        candidates = {float(fixed)}
    else:
        cache: dict = {}
        for k in k_values:
            tuning[k] = tune_parameter(
                algorithm,
                function,
                k,
                settings.tune_budget,
                None if search_range is None else tuple(search_range),
                settings.seed,
                settings,
                cache,
            )
        candidates = {t.best for t in tuning.values()}
    outcomes = [
        evaluate_parameter(algorithm, function, theta, settings, k_values, keep_trace=True)
        for theta in sorted(candidates)
    ]
    gaps, errs, params = {}, {}, {}
    for k in k_values:
        best = min(outcomes, key=lambda o: o.gaps[k])
        gaps[k], errs[k], params[k] = best.gaps[k], best.stderr[k], best.parameter
    floor = outcomes[0].resolution_floor
    used = set(params.values())
    traces = {o.parameter: o.trace for o in outcomes if o.trace is not None and o.parameter in used}
    return BestOfKReport(function, algorithm, k_values, gaps, errs, pname, params, tuning, floor, traces)


def _run_entry_args(args):
    return run_entry(*args)


def load_plan(plan: Mapping[str, Any] | str | Path) -> dict[str, Any]:
    if isinstance(plan, (str, Path)):
        from .engine import load_document

        plan = load_document(plan)
    plan = dict(plan)
    if "entries" not in plan or not plan["entries"]:
        raise ValueError("plan needs a non-empty 'entries' list")
    for e in plan["entries"]:
        lookup(str(e["function"]))
        canonical_algorithm(e["algorithm"])
    return plan


def write_reports(reports: Sequence[BestOfKReport], out_dir: Path, settings: BenchSettings) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [r for rep in reports for r in rep.rows()]
    fields = ["function", "algorithm", "k", "gap", "stderr", "parameter_name", "parameter", "resolution_floor"]
    with open(out_dir / "report.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    # table layout: one row per (function, k), one column per algorithm
    table: dict[tuple[str, int], dict[str, float]] = {}
    for rep in reports:
        for k in rep.k_values:
            table.setdefault((rep.function, k), {})[rep.algorithm] = rep.gaps[k]
    algos = [a for a in ALGORITHMS if any(rep.algorithm == a for rep in reports)]
    with open(out_dir / "table.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["function", "k"] + algos)
        for (fn, k), vals in table.items():
            w.writerow([fn, k] + [repr(vals[a]) if a in vals else "" for a in algos])
    doc = {"settings": asdict(settings), "reports": [rep.to_dict() for rep in reports]}
    (out_dir / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def run_suite(
    plan: Mapping[str, Any] | str | Path,
    output_dir: str | Path | None = None,
    workers: int = 1,
) -> list[BestOfKReport]:
    """Execute every plan entry and optionally write report.csv/report.json.

    Plan keys: ``entries`` (list of {function, algorithm, k_values,
    overrides}) and optional ``settings`` (see :class:`BenchSettings`).
    QHD entries also get the run trace of each reported L written to
    ``traces/``.
    """
    plan = load_plan(plan)
    settings = BenchSettings.from_mapping(plan.get("settings"))
    entries = list(plan["entries"])
    if workers > 1 and len(entries) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_entry_args, [(e, settings) for e in entries]))
    else:
        reports = [run_entry(e, settings) for e in entries]
    if output_dir is not None:
        out = Path(output_dir)
        write_reports(reports, out, settings)
        for rep in reports:
            for theta, tr in sorted(rep.traces.items()):
                (out / "traces").mkdir(exist_ok=True)
                tr.to_csv(out / "traces" / f"{rep.function}_QHD_L{theta:.6g}.csv")
    return reports
