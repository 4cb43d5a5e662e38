"""Command-line interface: ``qhdbench <verb> [flags]``.

Verbs: list-functions, run-qhd, run-baseline, lyapunov, study, bench.
The default output directory comes from ``$QHDBENCH_OUT`` (else
``./qhdbench-out``); a ``--config`` document overrides individual flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import baselines, corpus, engine, harness, observables
from .grid import save_binary, save_csv

__all__ = ["UsageError", "Command", "parse", "execute", "main", "EXIT_CODES"]

OUT_ENV = "QHDBENCH_OUT"
VERBS = ("list-functions", "run-qhd", "run-baseline", "lyapunov", "study", "bench")
EXIT_CODES = {"ok": 0, "error": 1, "usage": 2, "unknown_function": 3, "config": 4, "io": 5}


class UsageError(Exception):
    """Malformed command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _positive(kind):
    def conv(text: str):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v

    conv.__name__ = f"positive {kind.__name__}"
    return conv


def _nonnegative(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("list values must be positive")
    return vals


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", type=Path, default=None, help="JSON/TOML document overriding flags")
    p.add_argument("--workers", type=_positive(int), default=1)


def _qhd_flags(p: argparse.ArgumentParser, schedule_default: str | None = "C", h_list: bool = False) -> None:
    p.add_argument("--function", default="ABS")
    if h_list:
        p.add_argument("--h", type=_float_list, default=[0.2, 0.1, 0.05, 0.025], help="comma-separated step sizes")
    else:
        p.add_argument("--h", type=_positive(float), default=1e-3)
    p.add_argument("--schedule", choices=("SC", "C", "NC"), default=schedule_default)
    p.add_argument("--mu", type=_positive(float), default=None)
    p.add_argument("--alpha", type=_positive(float), default=None)
    p.add_argument("--N", type=_positive(int), default=None)
    p.add_argument("--L", type=_positive(float), default=1.0)
    p.add_argument("--T", type=_positive(float), default=10.0)
    p.add_argument("--K", type=_positive(int), default=None)
    p.add_argument("--t-start", dest="t_start", type=_nonnegative, default=None)
    p.add_argument("--init", dest="initial_state", choices=("uniform", "cos_product"), default="uniform")
    p.add_argument("--growth-rate", dest="growth_rate", type=_positive(float), default=1e3)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qhdbench", description="Discrete-time QHD simulation and benchmarking.")
    sub = parser.add_subparsers(dest="verb", metavar="verb", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("list-functions", help="print the corpus as JSON lines")
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("run-qhd", help="evolve one QHD run")
    _common(p)
    _qhd_flags(p)

    p = sub.add_parser("run-baseline", help="run Subgrad or LFMSGD once")
    _common(p)
    p.add_argument("--algo", choices=("subgrad", "lfmsgd"), default="subgrad")
    p.add_argument("--function", default="ABS")
    p.add_argument("--budget", type=_positive(int), default=10_000)
    p.add_argument("--eta", type=_positive(float), default=1.0)
    p.add_argument("--step-schedule", dest="step_schedule", choices=baselines.SCHEDULES, default="sqrt_decay")
    p.add_argument("--return-mode", dest="return_mode", choices=("final_iterate", "best_iterate"), default="final_iterate")
    p.add_argument("--sigma", type=_nonnegative, default=0.1)
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--x0", default=None, help="comma-separated start point (default: random in the box)")

    p = sub.add_parser("lyapunov", help="Lyapunov trace and monotonicity report")
    _common(p)
    _qhd_flags(p, schedule_default=None)
    p.add_argument("--kind", choices=("convex", "strongly_convex"), default=None)
    p.add_argument("--slack", type=_nonnegative, default=None, help="default: h")
    p.add_argument("--every", type=_positive(int), default=1)

    p = sub.add_parser("study", help="sweep step sizes and fit rates")
    _common(p)
    _qhd_flags(p, h_list=True)
    p.set_defaults(N=2048, T=20.0)
    p.add_argument("--model", choices=("power_law", "exponential"), default=None)

    p = sub.add_parser("bench", help="run a benchmark plan")
    _common(p)
    p.add_argument("--plan", type=Path, required=True)
    return parser


@dataclass
class Command:
    verb: str
    options: dict[str, Any] = field(default_factory=dict)
    out_dir: Path = Path("qhdbench-out")
    seed: int = 0

    def document(self) -> dict[str, Any]:
        """Flag values merged with the optional config document."""
        o = self.options
        skip = ("config", "out", "format", "workers")
        doc: dict[str, Any] = {k: v for k, v in o.items() if v is not None and k not in skip}
        if self.verb in ("run-qhd", "lyapunov", "study"):
            sched: dict[str, Any] = {"kind": o.get("schedule") or "C"}
            if o.get("mu") is not None:
                sched["mu"] = o["mu"]
            if o.get("alpha") is not None:
                sched["alpha"] = o["alpha"]
            for key in ("schedule", "mu", "alpha"):
                doc.pop(key, None)
            if o.get("schedule") is not None:
                doc["schedule"] = sched
        if o.get("config") is not None:
            doc.update(engine.load_document(o["config"]))
        doc.setdefault("seed", self.seed)
        return doc

    def qhd_config(self) -> engine.QHDConfig:
        doc = self.document()
        sched = doc.get("schedule", {"kind": "C"})
        if isinstance(sched, dict) and sched.get("kind") == "SC" and "mu" not in sched:
            sched = dict(sched, mu=1.0)
        if isinstance(sched, dict) and sched.get("kind") == "NC" and "alpha" not in sched:
            sched = dict(sched, alpha=1.0)
        doc["schedule"] = sched
        return engine.config_from_document(doc)


def parse(argv: Sequence[str]) -> Command:
    """Validate ``argv``; raises UsageError."""
    ns = build_parser().parse_args(list(argv))
    opts = vars(ns).copy()
    verb = opts.pop("verb")
    if verb in ("run-qhd", "lyapunov") and opts.get("config") is None and opts.get("K") is None:
        if opts["T"] / opts["h"] < 1:
            raise UsageError("T / h must allow at least one step")
    if opts.get("beta") is not None and not 0 <= opts["beta"] < 1:
        raise UsageError("--beta must lie in [0, 1)")
    out = opts.get("out") or Path(os.environ.get(OUT_ENV, "qhdbench-out"))
    return Command(verb, opts, Path(out), int(opts.get("seed") or 0))


# ---------------------------------------------------------------------------
# execution


def _write_json(path: Path, doc: Any) -> Path:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot encode {type(obj)}")


def _write_table(path_stem: Path, fmt: str, columns: list[str], data: np.ndarray) -> Path:
    if fmt == "json":
        return _write_json(path_stem.with_suffix(".json"), {c: data[:, i].tolist() for i, c in enumerate(columns)})
    path = path_stem.with_suffix(".csv")
    np.savetxt(path, data, delimiter=",", header=",".join(columns), comments="", fmt="%.17g")
    return path


def _list_functions(cmd: Command) -> int:
    lines = []
    for name in corpus.available():
        s = corpus.lookup(name)
        lines.append(
            json.dumps(
                {
                    "name": s.name,
                    "dim": s.dim,
                    "domain": [[lo, hi] for lo, hi in zip(s.lower, s.upper)],
                    "known_min_value": s.known_min_value,
                    "known_min_points": [list(q) for q in s.known_min_points],
                    "convexity": s.convexity,
                    "mu": s.mu,
                }
            )
        )
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if cmd.options.get("out") is not None:
        cmd.out_dir.mkdir(parents=True, exist_ok=True)
        (cmd.out_dir / "functions.jsonl").write_text(text)
    return 0


def _run_qhd(cmd: Command) -> int:
    cfg = cmd.qhd_config()
    trace = engine.evolve(cfg, keep_state=True)
    out = cmd.out_dir
    fmt = cmd.options["format"]
    data = np.column_stack([trace.k, trace.t, trace.expected_f, trace.gap])
    _write_table(out / "trace", fmt, ["k", "t", "expected_f", "gap"], data)
    save_csv(trace.final_field, out / "final_field.csv")
    save_binary(trace.final_field, out / "final_field.npy")
    summary = {
        "function": cfg.objective.name,
        "L": cfg.grid.half_width,
        "N": cfg.grid.n,
        "h": cfg.h,
        "K": cfg.iterations,
        "t_start": cfg.t_start,
        "schedule": cfg.schedule.to_dict(),
        "initial_state": cfg.initial_state,
        "terminal_gap": trace.terminal_gap,
        "resolution_floor": harness.resolution_floor(cfg.objective, cfg.grid),
        "max_norm_error": float(np.max(np.abs(trace.norm - 1))) if len(trace) else 0.0,
    }
    _write_json(out / "summary.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _run_baseline(cmd: Command) -> int:
    doc = cmd.document()
    spec = corpus.lookup(str(doc["function"]))
    doc.setdefault("algorithm", doc.get("algo", "subgrad"))
    if doc.get("x0") is not None:
        x0 = np.array([float(v) for v in str(doc["x0"]).split(",")]) if isinstance(doc["x0"], str) else np.asarray(doc["x0"], dtype=float)
    else:
        x0 = baselines.random_starts(spec, 1, int(doc["seed"]))[0]
    cfg = baselines.config_from_document(doc, x0=x0)
    if isinstance(cfg, baselines.SubgradConfig):
        res = baselines.subgrad_run(spec, cfg, record=True)
    else:
        res = baselines.lfmsgd_run(spec, cfg, record=True)
    out = cmd.out_dir
    cols = ["k"] + [f"x{i + 1}" for i in range(spec.dim)] + ["f"]
    k = np.arange(1, cfg.budget + 1)
    data = np.column_stack([k, res.trajectory[1:], res.trajectory_values[1:]])
    _write_table(out / "trajectory", cmd.options["format"], cols, data)
    summary = {
        "function": spec.name,
        "algorithm": doc["algorithm"],
        "x0": x0.tolist(),
        "solution": np.atleast_1d(res.solution).tolist(),
        "value": float(res.value),
        "gap": float(res.value - spec.known_min_value),
        "subgradient_queries": res.subgradient_queries,
        "function_queries": res.function_queries,
    }
    _write_json(out / "summary.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _lyapunov(cmd: Command) -> int:
    o = cmd.options
    spec = corpus.lookup(str(cmd.document().get("function", "ABS")))
    kind = o.get("kind") or ("strongly_convex" if spec.convexity == "strongly_convex" else "convex")
    if o.get("schedule") is None:
        o["schedule"] = "SC" if kind == "strongly_convex" else "C"
        if kind == "strongly_convex" and o.get("mu") is None:
            o["mu"] = spec.mu or 1.0
    cfg = cmd.qhd_config()
    mu = cfg.schedule.mu if kind == "strongly_convex" else None
    trace = observables.lyapunov_trace(cfg, kind, mu, every=o.get("every", 1))
    slack = cfg.h if o.get("slack") is None else o["slack"]
    report = observables.monotonicity_report(trace, slack)
    out = cmd.out_dir
    _write_table(out / "lyapunov", o["format"], ["t", "E"], np.column_stack([trace.t, trace.energy]))
    doc = dict(report.to_dict(), kind=kind, function=spec.name, h=cfg.h, N=cfg.grid.n)
    _write_json(out / "monotonicity.json", doc)
    print(json.dumps({k: doc[k] for k in ("function", "kind", "passed", "slack")}, sort_keys=True))
    return 0


def _study(cmd: Command) -> int:
    o = cmd.options
    doc = cmd.document()
    h_values = o["h"]
    if len(h_values) < 3:
        raise UsageError("study needs at least three step sizes")
    sched_doc = doc.get("schedule", {"kind": "C"})
    if isinstance(sched_doc, dict) and sched_doc.get("kind") == "SC" and "mu" not in sched_doc:
        sched_doc = dict(sched_doc, mu=1.0)
    schedule = engine.schedule_from_document(sched_doc)
    model = o.get("model") or ("exponential" if schedule.kind == "SC" else "power_law")
    res = harness.study_step_sizes(
        str(doc.get("function", "ABS")),
        h_values,
        schedule,
        N=int(doc.get("N", 2048)),
        L=float(doc.get("L", 1.0)),
        T=float(doc.get("T", 20.0)),
        t_start=doc.get("t_start"),
        initial_state=str(doc.get("initial_state", "uniform")),
        rate_model=model,
    )
    out = cmd.out_dir
    for h, tr in zip(res.h_values, res.traces):
        tr.to_csv(out / f"trace_h{h:g}.csv")
    rows = []
    for h, g, f in zip(res.h_values, res.terminal_gaps, res.rate_fits):
        rows.append([h, g, np.nan if f is None else f.slope])
    if o["format"] == "json":
        _write_json(out / "study.json", res.to_dict())
    else:
        with open(out / "study.csv", "w") as fh:
            fh.write("h,terminal_gap,rate_slope\n")
            for h, g, f in zip(res.h_values, res.terminal_gaps, res.rate_fits):
                fh.write(f"{h!r},{g!r},{'' if f is None else repr(f.slope)}\n")
        with open(out / "plateau_fit.csv", "w") as fh:
            pf = res.plateau_fit
            fh.write("slope,intercept,h_min,h_max,residual,n_points\n")
            fh.write(f"{pf.slope!r},{pf.intercept!r},{pf.window[0]!r},{pf.window[1]!r},{pf.residual!r},{pf.n_points}\n")
    print(json.dumps({"function": res.function, "plateau_slope": res.plateau_fit.slope}, sort_keys=True))
    return 0


def _bench(cmd: Command) -> int:
    reports = harness.run_suite(cmd.options["plan"], cmd.out_dir, workers=cmd.options.get("workers", 1))
    if cmd.options["format"] == "json":
        print(json.dumps([r.to_dict() for r in reports], sort_keys=True))
    else:
        for r in reports:
            for row in r.rows():
                print(f"{row['function']},{row['algorithm']},{row['k']},{row['gap']!r}")
    return 0


_HANDLERS = {
    "list-functions": _list_functions,
    "run-qhd": _run_qhd,
    "run-baseline": _run_baseline,
    "lyapunov": _lyapunov,
    "study": _study,
    "bench": _bench,
}


def execute(cmd: Command) -> int:
    """Run ``cmd``; returns the exit status."""
    if cmd.verb != "list-functions":
        cmd.out_dir.mkdir(parents=True, exist_ok=True)
    return _HANDLERS[cmd.verb](cmd)


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        return execute(parse(argv))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_CODES["usage"]
    except corpus.UnknownFunction as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CODES["unknown_function"]
    except (engine.ConfigError, harness.InsufficientRuns, harness.EmptyWindow, harness.TooFewPoints, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CODES["config"]
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]


if __name__ == "__main__":
    raise SystemExit(main())
