"""Expectation values and Lyapunov functions of QHD wavefunctions.

Position moments are plain weighted sums over the grid.  Momentum moments use
the unitary DFT, and the anticommutator {x, p} is evaluated with a spectral
derivative in both operator orders and then symmetrized.

Lyapunov values are taken in the frame centered at the objective's first
known minimizer with the minimum value subtracted, so an objective produced by
:func:`qhdbench.corpus.center` and an uncentered one give the same numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import QHDConfig, _grid_values, trajectory
from .grid import GridSpec, WaveFunction

__all__ = [
    "MomentSet",
    "LyapunovTrace",
    "MonotonicityReport",
    "moments",
    "lyapunov_convex",
    "lyapunov_strongly_convex",
    "lyapunov_trace",
    "monotonicity_report",
    "fit_decay_rate",
]


@dataclass(frozen=True)
class MomentSet:
    t: float
    expect_f: float
    expect_p2: np.ndarray
    expect_x2: np.ndarray
    expect_xp_anticomm: np.ndarray
    anticomm_imag: float = 0.0


@dataclass
class LyapunovTrace:
    """E(t) along a run, with the matching <f> (centered) for reference."""

    t: np.ndarray
    energy: np.ndarray
    expected_f: np.ndarray
    kind: str = "convex"
    mu: float | None = None

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        np.savetxt(
            path,
            np.column_stack([self.t, self.energy]),
            delimiter=",",
            header="t,E",
            comments="",
            fmt="%.17g",
        )
        return path


@dataclass(frozen=True)
class MonotonicityReport:
    violations: list[int] = field(default_factory=list)
    max_relative_increase: float = 0.0
    slack: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "slack": self.slack,
            "violations": list(self.violations),
            "max_relative_increase": self.max_relative_increase,
        }


def _frame(objective, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Centered grid values and the centering origin."""
    if isinstance(objective, np.ndarray):
        return objective, np.zeros(grid.dim)
    values = _grid_values(objective, grid) - objective.known_min_value
    pts = getattr(objective, "known_min_points", ())
    origin = np.asarray(pts[0], dtype=float) if len(pts) else np.zeros(grid.dim)
    return values, origin


class _MomentKernel:
    """Precomputed grids for repeated moment evaluation on one grid."""

    def __init__(self, grid: GridSpec, values: np.ndarray, origin: np.ndarray):
        self.grid = grid
        self.values = values
        d = grid.dim
        self.shapes = [[-1 if i == ax else 1 for i in range(d)] for ax in range(d)]
        self.x = [(grid.axis - origin[ax]).reshape(s) for ax, s in enumerate(self.shapes)]
        self.kappa = [grid.frequencies.reshape(s) for s in self.shapes]

    def __call__(self, amps: np.ndarray, t: float) -> MomentSet:
        grid = self.grid
        dvol = grid.cell_volume
        mass = amps.real**2 + amps.imag**2
        total = mass.sum()
        psi = amps / np.sqrt(total * dvol)
        prob = mass / total
        spec = np.fft.fftn(psi)
        pmass = spec.real**2 + spec.imag**2
        pmass = pmass / pmass.sum()
        ef = float(np.sum(prob * self.values))
        p2 = np.empty(grid.dim)
        x2 = np.empty(grid.dim)
        xp = np.empty(grid.dim)
        imag = 0.0
        for ax in range(grid.dim):
            x, k = self.x[ax], self.kappa[ax]
            p2[ax] = np.sum(pmass * k**2)
            x2[ax] = np.sum(prob * x**2)
            p_psi = np.fft.ifftn(k * spec)
            p_xpsi = np.fft.ifftn(k * np.fft.fftn(x * psi))
            a = np.vdot(psi, x * p_psi) * dvol
            b = np.vdot(psi, p_xpsi) * dvol
            xp[ax] = (a + b).real
            imag = max(imag, abs((a + b).imag))
        return MomentSet(float(t), ef, p2, x2, xp, imag)


def moments(psi: WaveFunction, objective, t: float) -> MomentSet:
    """<f>, <p_j^2>, <x_j^2> and <{x_j, p_j}> in the centered frame."""
    values, origin = _frame(objective, psi.grid)
    return _MomentKernel(psi.grid, values, origin)(psi.amplitudes, t)


def _convex_energy(m: MomentSet) -> float:
    t = m.t
    return float(
        t**2 * m.expect_f
        + 0.5 * np.sum(m.expect_p2 / t**4 + 2 * m.expect_xp_anticomm / t**2 + 4 * m.expect_x2)
    )


def _strongly_convex_energy(m: MomentSet, mu: float) -> float:
    r = np.sqrt(mu)
    damp = np.exp(-2 * r * m.t)
    j2 = damp**2 * m.expect_p2 + 2 * r * damp * m.expect_xp_anticomm + 4 * mu * m.expect_x2
    return float(m.expect_f + 0.25 * damp**2 * np.sum(m.expect_p2) + 0.25 * np.sum(j2))


def lyapunov_convex(psi: WaveFunction, objective, t: float) -> float:
    """t^2 <f> + 1/2 sum_j <(p_j / t^2 + 2 x_j)^2>."""
    if not t > 0:
        raise ValueError("t must be positive")
    return _convex_energy(moments(psi, objective, t))


def lyapunov_strongly_convex(psi: WaveFunction, objective, t: float, mu: float) -> float:
    """<f> + e^{-4 sqrt(mu) t}/4 sum_j <p_j^2> + 1/4 sum_j <J_j^2>."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    return _strongly_convex_energy(moments(psi, objective, t), mu)


def lyapunov_trace(config: QHDConfig, kind: str = "convex", mu: float | None = None, every: int = 1) -> LyapunovTrace:
    """Evaluate the Lyapunov function along a QHD run (including t_start)."""
    if kind not in ("convex", "strongly_convex"):
        raise ValueError(f"unknown Lyapunov kind {kind!r}")
    if kind == "strongly_convex":
        mu = mu if mu is not None else getattr(config.schedule, "mu", None)
        if mu is None or not mu > 0:
            raise ValueError("strongly convex Lyapunov function needs mu > 0")
    values, origin = _frame(config.objective, config.grid)
    kernel = _MomentKernel(config.grid, values, origin)
    ts, es, fs = [], [], []
    for k, t, amps in trajectory(config, values + config.objective.known_min_value):
        if k % every and k != config.iterations:
            continue
        if kind == "convex" and t <= 0:
            continue
        m = kernel(amps, t)
        ts.append(t)
        fs.append(m.expect_f)
        es.append(_convex_energy(m) if kind == "convex" else _strongly_convex_energy(m, mu))
    return LyapunovTrace(np.array(ts), np.array(es), np.array(fs), kind, mu)


def monotonicity_report(trace: LyapunovTrace, slack: float) -> MonotonicityReport:
    """Indices k with E_k > E_{k-1} (1 + slack)."""
    e = np.asarray(trace.energy, dtype=float)
    if e.size == 0:
        raise ValueError("empty trace")
    prev, nxt = e[:-1], e[1:]
    bad = np.flatnonzero(nxt > prev + slack * np.abs(prev)) + 1
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(prev != 0, (nxt - prev) / np.abs(prev), 0.0)
    return MonotonicityReport([int(i) for i in bad], float(rel.max()) if rel.size else 0.0, float(slack))


def fit_decay_rate(trace: LyapunovTrace, t_window: tuple[float, float] | None = None) -> float:
    """Least-squares rate r in E ~ C exp(-r t)."""
    t, e = np.asarray(trace.t), np.asarray(trace.energy)
    mask = e > 0
    if t_window is not None:
        mask &= (t >= t_window[0]) & (t <= t_window[1])
    if mask.sum() < 2:
        raise ValueError("not enough positive samples to fit")
    slope = np.polyfit(t[mask], np.log(e[mask]), 1)[0]
    return float(-slope)
