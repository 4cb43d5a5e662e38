"""Projected subgradient method and LFMSGD.

Both algorithms are vectorized over independent runs: ``x0`` may be a single
point of shape ``(d,)`` or a batch of starting points of shape ``(R, d)``.
Each run uses exactly ``budget`` subgradient queries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .corpus import BarrierWrappedObjective, ObjectiveSpec

__all__ = [
    "SubgradConfig",
    "LFMSGDConfig",
    "BaselineResult",
    "project_to_box",
    "step_sizes",
    "subgrad_run",
    "lfmsgd_run",
    "random_starts",
]

SCHEDULES = ("constant", "sqrt_decay", "strongly_convex")


def _inner(objective) -> ObjectiveSpec:
    return objective.inner if isinstance(objective, BarrierWrappedObjective) else objective


def project_to_box(p, lower, upper) -> np.ndarray:
    """Coordinate-wise clamp onto [lower, upper]."""
    return np.clip(np.asarray(p, dtype=float), np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))


def random_starts(objective, runs: int, seed: int) -> np.ndarray:
    """``runs`` starting points drawn uniformly from the box."""
    spec = _inner(objective)
    rng = np.random.default_rng(seed)
    return spec.lower_array + rng.random((runs, spec.dim)) * spec.width


@dataclass(frozen=True)
class SubgradConfig:
    """``step`` is s (constant), eta (sqrt_decay) or mu (strongly_convex)."""

    schedule: str = "sqrt_decay"
    step: float = 1.0
    budget: int = 10_000
    x0: Any = None
    return_mode: str = "final_iterate"

    def __post_init__(self) -> None:
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")
        if not self.step > 0:
            raise ValueError("step parameter must be positive")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.return_mode not in ("final_iterate", "best_iterate"):
            raise ValueError("return_mode must be final_iterate or best_iterate")


@dataclass(frozen=True)
class LFMSGDConfig:
    """``r_eps=None`` means 1e-6 times the largest box width."""

    sigma: float = 0.0
    beta: float = 0.9
    eps0: float = 1e-8
    r_eps: float | None = None
    budget: int = 10_000
    x0: Any = None
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.beta < 1:
            raise ValueError("beta must lie in [0, 1)")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if self.r_eps is not None and self.r_eps < 0:
            raise ValueError("r_eps must be >= 0")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")


@dataclass
class BaselineResult:
    """Solution(s) of one or many runs.

    ``trajectory`` (when recorded) has shape ``(budget + 1, ..., d)`` and
    starts with ``x0``; ``trajectory_values`` holds f along it.
    """

    solution: np.ndarray
    value: np.ndarray | float
    subgradient_queries: int
    function_queries: int
    trajectory: np.ndarray | None = field(default=None, repr=False)
    trajectory_values: np.ndarray | None = field(default=None, repr=False)

    def best_gaps(self, f_min: float) -> np.ndarray:
        """Best-so-far gap after each query (requires a recorded trajectory)."""
        if self.trajectory_values is None:
            raise ValueError("trajectory was not recorded")
        return np.minimum.accumulate(self.trajectory_values - f_min, axis=0)

    def to_csv(self, path: str | Path) -> Path:
        """Rows k = 1..budget: the iterate after the k-th query and f there."""
        if self.trajectory is None or self.trajectory.ndim != 2:
            raise ValueError("CSV export needs a recorded single-run trajectory")
        path = Path(path)
        traj = self.trajectory[1:]
        k = np.arange(1, len(traj) + 1)
        d = traj.shape[1]
        header = ",".join(["k"] + [f"x{i + 1}" for i in range(d)] + ["f"])
        data = np.column_stack([k, traj, self.trajectory_values[1:]])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")
        return path


def step_sizes(config: SubgradConfig) -> np.ndarray:
    j = np.arange(1, config.budget + 1, dtype=float)
    if config.schedule == "constant":
        return np.full(config.budget, float(config.step))
    if config.schedule == "sqrt_decay":
        return config.step / np.sqrt(j)
    return 2.0 / (config.step * (j + 1.0))


def _start(spec: ObjectiveSpec, x0) -> np.ndarray:
    if x0 is None:
        raise ValueError("x0 is required")
    x = np.asarray(x0, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != spec.dim:
        raise ValueError(f"x0 must have trailing dimension {spec.dim}")
    if not np.all(spec.contains(x)):
        raise ValueError("x0 must lie in the domain")
    return x.copy()


def subgrad_run(objective, config: SubgradConfig, record: bool = False) -> BaselineResult:
    """x_{k+1} = clip(x_k - s_k g_k) for ``budget`` steps."""
    spec = _inner(objective)
    lo, hi = spec.lower_array, spec.upper_array
    x = _start(spec, config.x0)
    steps = step_sizes(config)
    keep = record or config.return_mode == "best_iterate"
    traj = [x.copy()] if keep else None
    for s in steps:
        x = np.clip(x - s * spec.gradients(x), lo, hi)
        if keep:
            traj.append(x)
    if keep:
        path = np.stack(traj)
        values = spec.values(path)
    if config.return_mode == "best_iterate":
        best = np.argmin(values, axis=0)
        solution = np.take_along_axis(path, best[None, ..., None], axis=0)[0]
        value = np.take_along_axis(values, best[None, ...], axis=0)[0]
        fq = config.budget + 1
    else:
        solution = x
        value = values[-1] if keep else spec.values(x)
        fq = 1
    return BaselineResult(
        solution,
        value,
        config.budget,
        fq,
        path if record else None,
        values if record else None,
    )


def lfmsgd_run(objective, config: LFMSGDConfig, record: bool = False) -> BaselineResult:
    """Learning-rate-free momentum SGD with Gaussian subgradient noise.

    eta_t = max(r_eps, max_{i<=t} |x_i - x_0|) / sqrt(eps0 + sum_{i<=t} |m_i|^2)
    m_{t+1} = beta m_t + (1 - beta) g(x_t)
    x_{t+1} = clip(x_t - eta_t m_{t+1})
    """
    spec = _inner(objective)
    lo, hi = spec.lower_array, spec.upper_array
    x0 = _start(spec, config.x0)
    r_eps = 1e-6 * float(np.max(spec.width)) if config.r_eps is None else config.r_eps
    rng = np.random.default_rng(config.rng_seed)
    beta, sigma = config.beta, config.sigma
    x = x0.copy()
    m = np.zeros_like(x)
    sum_m2 = np.zeros(x.shape[:-1])
    reach = np.zeros(x.shape[:-1])
    traj = [x.copy()] if record else None
    for _ in range(config.budget):
        g = spec.gradients(x)
        if sigma > 0:
            g = g + sigma * rng.standard_normal(x.shape)
        m = beta * m + (1.0 - beta) * g
        eta = np.maximum(r_eps, reach) / np.sqrt(config.eps0 + sum_m2)
        x = np.clip(x - eta[..., None] * m, lo, hi)
        sum_m2 = sum_m2 + np.sum(m * m, axis=-1)
        reach = np.maximum(reach, np.linalg.norm(x - x0, axis=-1))
        if record:
            traj.append(x)
    path = np.stack(traj) if record else None
    values = spec.values(path) if record else None
    value = values[-1] if record else spec.values(x)
    return BaselineResult(x, value, config.budget, 1, path, values)


def config_from_document(doc: Mapping[str, Any], x0=None) -> SubgradConfig | LFMSGDConfig:
    """Baseline settings from the shared document format."""
    algo = str(doc.get("algorithm", doc.get("algo", "subgrad"))).lower()
    budget = int(doc.get("budget", 10_000))
    if algo == "subgrad":
        return SubgradConfig(
            schedule=str(doc.get("step_schedule", "sqrt_decay")),
            step=float(doc.get("eta", doc.get("step", 1.0))),
            budget=budget,
            x0=x0,
            return_mode=str(doc.get("return_mode", "final_iterate")),
        )
    if algo == "lfmsgd":
        return LFMSGDConfig(
            sigma=float(doc.get("sigma", 0.1)),
            beta=float(doc.get("beta", 0.9)),
            eps0=float(doc.get("eps0", 1e-8)),
            r_eps=None if doc.get("r_eps") is None else float(doc["r_eps"]),
            budget=budget,
            x0=x0,
            rng_seed=int(doc.get("seed", 0)),
        )
    raise ValueError(f"unknown baseline algorithm {algo!r}")
