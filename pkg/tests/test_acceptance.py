"""End-to-end acceptance checks; each test records one PASS/FAIL line.

Tolerances are pinned constants below.  Slow criteria are marked but run by
default.
"""

import numpy as np
import pytest

from qhdbench.baselines import SubgradConfig, subgrad_run
from qhdbench.corpus import center, lookup, rescale_to_hypercube, wrap_barrier
from qhdbench.engine import QHDConfig, Schedule, dense_propagator_reference, evolve, trajectory
from qhdbench.grid import GridSpec, ProbabilityField, sample
from qhdbench.harness import (
    BenchSettings,
    best_of_k_exact,
    best_of_k_mc,
    fit_convergence,
    fit_plateau_vs_h,
    resolution_floor,
    run_suite,
)
from qhdbench.observables import lyapunov_trace, monotonicity_report

NORM_TOL = 1e-9
TROTTER_SLOPE, TROTTER_TOL = 1.0, 0.15
PLATEAU_BANDS = {0.1: (0.015, 0.06), 0.05: (0.005, 0.02)}
CONVEX_SLOPE, CONVEX_TOL = -2.0, 0.4
PLATEAU_SLOPE, PLATEAU_TOL = 1.0, 0.3
STUDY_H = (0.2, 0.1, 0.05, 0.025)
MC_KS = (1, 3, 10, 30, 100)
MC_SEEDS, MC_MIN_OK, MC_Z = 100, 95, 3.0
BENCH_RATIO = 10.0
RESCALE_TOL = 1e-8


def unit_objective(name, L=1.0):
    return wrap_barrier(rescale_to_hypercube(lookup(name), L))


def warmup_config(name, h, schedule, T, N=2048):
    """Warm-up setting: whole domain mapped to [-1, 1], uniform start."""
    return QHDConfig(GridSpec(1, N, 1.0), schedule, h, int(round(T / h)), unit_objective(name))


ABS_C = dict(name="ABS", schedule=Schedule.convex(), T=20.0)
EXPABS_SC = dict(name="EXPABS", schedule=Schedule.strongly_convex(1.0), T=6.0)


def test_unitarity(criterion):
    cfg = QHDConfig(GridSpec(1, 256, 1.0), Schedule.convex(), 1e-3, 10_000, unit_objective("ABS"))
    err = float(np.max(np.abs(evolve(cfg).norm - 1.0)))
    ok = criterion(1, "unitarity", err <= NORM_TOL, f"max |norm-1| over 10^4 steps = {err:.2e} (tol {NORM_TOL:.0e})")
    assert ok


def test_trotter_order(criterion):
    g = GridSpec(1, 16, 1.0)
    square = lookup("SQUARE")
    sched = Schedule.convex()
    ref_cfg = QHDConfig(g, sched, 1 / 4096, 4096, square)
    ref = dense_propagator_reference(ref_cfg).amplitudes
    hs = [2.0**-j for j in range(6, 11)]
    errs = []
    for h in hs:
        cfg = QHDConfig(g, sched, h, int(round(1 / h)), square)
        *_, (_, _, amps) = trajectory(cfg)
        errs.append(float(np.sqrt(np.sum(np.abs(amps - ref) ** 2) * g.spacing)))
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    ok = abs(slope - TROTTER_SLOPE) <= TROTTER_TOL
    criterion(2, "Trotter order", ok, f"log-log slope {slope:.3f}, halving ratios {np.round(ratios, 3).tolist()}")
    assert ok


@pytest.mark.slow
def test_plateau_values(criterion):
    found = {}
    for h in PLATEAU_BANDS:
        found[h] = evolve(warmup_config(h=h, **ABS_C)).gap.min()
    ok = all(lo <= found[h] <= hi for h, (lo, hi) in PLATEAU_BANDS.items())
    detail = ", ".join(f"h={h}: {found[h]:.4f} in {PLATEAU_BANDS[h]}" for h in PLATEAU_BANDS)
    criterion(3, "plateau values", ok, detail)
    assert ok


@pytest.mark.slow
def test_convergence_rates(criterion):
    convex = fit_convergence(evolve(warmup_config(h=0.025, **ABS_C)), "power_law")
    sc_trace = evolve(warmup_config(h=0.025, **EXPABS_SC))
    exp_fit = fit_convergence(sc_trace, "exponential")
    pow_fit = fit_convergence(sc_trace, "power_law", exp_fit.window)
    ok_c = abs(convex.slope - CONVEX_SLOPE) <= CONVEX_TOL
    ok_sc = exp_fit.residual < pow_fit.residual
    detail = (
        f"|x| slope {convex.slope:.3f} on kh in [{convex.window[0]:.3g}, {convex.window[1]:.3g}]; "
        f"e^|x|-1 residuals exp {exp_fit.residual:.3f} < power {pow_fit.residual:.3f}: {ok_sc}"
    )
    criterion(4, "convergence rates", ok_c and ok_sc, detail)
    assert ok_c and ok_sc


@pytest.mark.slow
def test_plateau_vs_step(criterion):
    slopes = {}
    for setup in (ABS_C, EXPABS_SC):
        gaps = [(h, evolve(warmup_config(h=h, **setup)).terminal_gap) for h in STUDY_H]
        slopes[setup["name"]] = fit_plateau_vs_h(gaps).slope
    ok = all(abs(s - PLATEAU_SLOPE) <= PLATEAU_TOL for s in slopes.values())
    criterion(5, "plateau vs h", ok, ", ".join(f"{k} slope {v:.3f}" for k, v in slopes.items()))
    assert ok


@pytest.mark.slow
def test_lyapunov_monotone(criterion):
    h = 1e-3
    g = GridSpec(1, 1024, 1.0)
    c_cfg = QHDConfig(g, Schedule.convex(), h, 10_000, wrap_barrier(center(lookup("ABS"))))
    sc_cfg = QHDConfig(g, Schedule.strongly_convex(1.0), h, 5_000, wrap_barrier(center(lookup("EXPABS"))))
    rc = monotonicity_report(lyapunov_trace(c_cfg, "convex"), h)
    rs = monotonicity_report(lyapunov_trace(sc_cfg, "strongly_convex", 1.0), h)
    ok = rc.passed and rs.passed
    detail = (
        f"C on |x|: {len(rc.violations)} violations (max rel increase {rc.max_relative_increase:.2e}); "
        f"SC on e^|x|-1: {len(rs.violations)} violations (max rel increase {rs.max_relative_increase:.2e})"
    )
    criterion(6, "Lyapunov monotonicity", ok, detail)
    assert ok


class _SinField:
    values = staticmethod(lambda x: np.sum(np.sin(3 * x) + x**2, axis=-1))


def test_best_of_k_oracle(criterion):
    g = GridSpec(1, 64, 1.0)
    mass = np.random.default_rng(123).random(64) ** 3
    field = ProbabilityField(g, mass / mass.sum())
    f_min = -1.0
    obj = _SinField()
    exact = {k: best_of_k_exact(field, obj, f_min, k) for k in MC_KS}
    hits = {k: 0 for k in MC_KS}
    for seed in range(MC_SEEDS):
        pts = sample(field, seed, 10_000)
        vals = obj.values(pts)
        for k in MC_KS:
            est, se = best_of_k_mc(pts, obj, f_min, k, resamples=10_000, rng_seed=seed, values=vals)
            hits[k] += abs(est - exact[k]) <= MC_Z * se
    ok = all(v >= MC_MIN_OK for v in hits.values())
    criterion(7, "best-of-k MC vs exact", ok, f"seeds within 3 stderr per k: {hits} (need >= {MC_MIN_OK}/{MC_SEEDS})")
    assert ok


def test_subgradient_bounds(criterion):
    k = 10_000
    r = subgrad_run(lookup("ABS"), SubgradConfig("sqrt_decay", 1.0, k, x0=[1.0]), record=True)
    abs_gap = float(r.best_gaps(0.0)[k])
    abs_bound = 1.0 * 1.0 * np.log(k) / np.sqrt(k)
    spec = lookup("EXPABS")
    lip = np.e
    r = subgrad_run(spec, SubgradConfig("strongly_convex", 1.0, k, x0=[1.0]), record=True)
    best = r.best_gaps(0.0)
    sc = {c: (float(best[c]), 2 * lip**2 / (1.0 * (c + 1))) for c in (100, 1_000, 10_000)}
    ok = abs_gap <= abs_bound and all(g <= b for g, b in sc.values())
    detail = f"|x|: {abs_gap:.2e} <= {abs_bound:.3e}; e^|x|-1: " + ", ".join(
        f"k={c}: {g:.2e} <= {b:.2e}" for c, (g, b) in sc.items()
    )
    criterion(8, "subgradient bounds", ok, detail)
    assert ok


@pytest.mark.slow
def test_benchmark_xinsheyang04(criterion, tmp_path):
    plan = {
        "settings": BenchSettings(N=128).__dict__,
        "entries": [{"function": "XINSHEYANG04", "algorithm": a, "k_values": [10]} for a in ("QHD", "Subgrad", "LFMSGD")],
    }
    reports = {r.algorithm: r for r in run_suite(plan, tmp_path)}
    gaps = {a: r.gaps[10] for a, r in reports.items()}
    ok = BENCH_RATIO * gaps["QHD"] <= min(gaps["Subgrad"], gaps["LFMSGD"])
    params = {a: round(r.parameters[10], 4) for a, r in reports.items()}
    detail = ", ".join(f"{a} {g:.3e}" for a, g in gaps.items()) + f" (tuned {params})"
    criterion(9, "benchmark XINSHEYANG04 k=10", ok, detail)
    assert ok


def test_rescaling_equivalence(criterion):
    worst = 0.0
    for name, L, sched in (("SCHWEFEL", 3.0, Schedule.convex()), ("ABS", 0.6, Schedule.strongly_convex(1.0))):
        cfg = QHDConfig(GridSpec(1, 64, L), sched, 1e-3, 2_000, unit_objective(name, L))
        a = evolve(cfg).final_field
        b = evolve(cfg.rescaled_to_unit()).final_field
        np.testing.assert_allclose(b.grid.axis * L, a.grid.axis, atol=1e-14)
        worst = max(worst, float(np.max(np.abs(a.mass - b.mass))))
    ok = worst <= RESCALE_TOL
    criterion(10, "rescaling equivalence", ok, f"max field deviation {worst:.2e} (tol {RESCALE_TOL:.0e})")
    assert ok


@pytest.mark.slow
def test_resolution_floor(criterion):
    floors, gaps, ok = {}, {}, True
    for n in (64, 128, 256):
        cfg = QHDConfig(GridSpec(2, n, 1.0), Schedule.convex(), 1e-3, 10_000, unit_objective("ACKLEY"))
        floors[n] = resolution_floor(cfg.objective, cfg.grid)
        tr = evolve(cfg)
        vals = cfg.objective.values(cfg.grid.points())
        best10 = best_of_k_exact(tr.final_field, None, cfg.objective.known_min_value, 10, values=vals)
        gaps[n] = (tr.terminal_gap, best10)
        ok &= floors[n] > 0 and tr.gap.min() >= floors[n] and best10 >= floors[n]
    ok &= floors[64] > floors[128] > floors[256]
    detail = ", ".join(
        f"N={n}: floor {floors[n]:.3f}, final gap {gaps[n][0]:.3f}, best-of-10 {gaps[n][1]:.3f}" for n in floors
    )
    criterion(11, "resolution floor", bool(ok), detail)
    assert ok
