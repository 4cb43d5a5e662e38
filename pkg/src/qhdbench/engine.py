"""Discrete-time QHD: split-step evolution under a time-dependent schedule.

Step k (k = 1..K) sets ``t_k = t_start + k h`` and applies

    psi <- exp(-i h lambda(t_k) f) psi                  (potential phase)
    psi <- IFFT exp(-i h |kappa|^2 / (2 lambda(t_k))) FFT psi   (kinetic phase)

in that order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterator, Mapping

import numpy as np

from .corpus import BarrierWrappedObjective, ObjectiveSpec, lookup, rescale_to_hypercube, wrap_barrier
from .grid import GridSpec, ProbabilityField, WaveFunction, cos_product_state, probability, uniform_state

__all__ = [
    "ConfigError",
    "SizeLimit",
    "Schedule",
    "QHDConfig",
    "RunTrace",
    "potential_phase_step",
    "kinetic_step",
    "trotter_step",
    "initial_wavefunction",
    "trajectory",
    "evolve",
    "dense_propagator_reference",
    "load_document",
    "config_from_document",
    "DESK_POINTS",
]

DENSE_LIMIT = 4096
# default points per axis by dimension
DESK_POINTS = {1: 512, 2: 128, 3: 64}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class SizeLimit(ValueError):
    """Grid too large for the dense reference propagator."""


@dataclass(frozen=True)
class Schedule:
    """lambda(t) = amplitude * base(time_scale * t).

    ``kind`` is ``"SC"`` (exp(2 sqrt(mu) t)), ``"C"`` (t^3), ``"NC"``
    (alpha t^(1/3)) or ``"custom"`` (linear interpolation of ``table``).
    ``amplitude`` and ``time_scale`` are 1 except for rescaled schedules.
    """

    kind: str
    mu: float | None = None
    alpha: float | None = None
    table: tuple[tuple[float, float], ...] | None = None
    amplitude: float = 1.0
    time_scale: float = 1.0

    def __post_init__(self) -> None:
        kind = self.kind.upper() if self.kind.lower() != "custom" else "custom"
        object.__setattr__(self, "kind", kind)
        if kind == "SC":
            if self.mu is None or not self.mu > 0:
                raise ConfigError("SC schedule needs mu > 0")
        elif kind == "NC":
            if self.alpha is None or not self.alpha > 0:
                raise ConfigError("NC schedule needs alpha > 0")
        elif kind == "custom":
            if not self.table:
                raise ConfigError("custom schedule needs a non-empty table")
            ts, ls = np.asarray(self.table, dtype=float).T
            if np.any(np.diff(ts) <= 0):
                raise ConfigError("custom schedule times must be increasing")
            if np.any(ls <= 0):
                raise ConfigError("custom schedule values must be positive")
        elif kind != "C":
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        if not (self.amplitude > 0 and self.time_scale > 0):
            raise ConfigError("amplitude and time_scale must be positive")

    @classmethod
    def strongly_convex(cls, mu: float) -> "Schedule":
        return cls("SC", mu=mu)

    @classmethod
    def convex(cls) -> "Schedule":
        return cls("C")

    @classmethod
    def nonconvex(cls, alpha: float = 1.0) -> "Schedule":
        return cls("NC", alpha=alpha)

    @classmethod
    def custom(cls, table) -> "Schedule":
        return cls("custom", table=tuple((float(t), float(v)) for t, v in table))

    @classmethod
    def constant(cls, value: float) -> "Schedule":
        return cls.custom([(0.0, value)])

    @property
    def needs_positive_start(self) -> bool:
        return self.kind in ("C", "NC")

    @property
    def default_t_start(self) -> float:
        return 0.1 if self.needs_positive_start else 0.0

    def _base(self, t):
        if self.kind == "SC":
            return np.exp(2.0 * np.sqrt(self.mu) * t)
        if self.kind == "C":
            return t**3
        if self.kind == "NC":
            return self.alpha * np.cbrt(t)
        ts, ls = np.asarray(self.table, dtype=float).T
        return np.interp(t, ts, ls)

    def __call__(self, t):
        out = self.amplitude * self._base(self.time_scale * np.asarray(t, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def rescaled(self, half_width: float) -> "Schedule":
        """Schedule tau -> L lambda(L tau) used on the unit box."""
        return replace(self, amplitude=self.amplitude * half_width, time_scale=self.time_scale * half_width)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.mu is not None:
            out["mu"] = self.mu
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.table is not None:
            out["table"] = [list(r) for r in self.table]
        if self.amplitude != 1.0 or self.time_scale != 1.0:
            out["amplitude"], out["time_scale"] = self.amplitude, self.time_scale
        return out


Objective = ObjectiveSpec | BarrierWrappedObjective


@dataclass(frozen=True)
class QHDConfig:
    """Inputs of one QHD run. ``t_start=None`` picks the schedule's default."""

    grid: GridSpec
    schedule: Schedule
    h: float
    iterations: int
    objective: Objective
    t_start: float | None = None
    initial_state: str = "uniform"
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.t_start is None:
            object.__setattr__(self, "t_start", self.schedule.default_t_start)
        if not (np.isfinite(self.h) and self.h > 0):
            raise ConfigError("step size h must be positive")
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ConfigError("iterations must be a nonnegative integer")
        if self.t_start < 0:
            raise ConfigError("t_start must be >= 0")
        if self.schedule.needs_positive_start and self.t_start == 0:
            raise ConfigError(f"t_start must be > 0 for the {self.schedule.kind} schedule")
        if self.initial_state not in ("uniform", "cos_product"):
            raise ConfigError(f"unknown initial state {self.initial_state!r}")
        if self.objective.dim != self.grid.dim:
            raise ConfigError("objective and grid dimensions differ")

    @property
    def t_end(self) -> float:
        return self.t_start + self.iterations * self.h

    def times(self) -> np.ndarray:
        return self.t_start + self.h * np.arange(1, self.iterations + 1)

    def rescaled_to_unit(self) -> "QHDConfig":
        """Equivalent run on half-width 1 (time and step divided by L)."""
        L = self.grid.half_width
        inner = self.objective.inner if isinstance(self.objective, BarrierWrappedObjective) else self.objective
        unit_inner = _rescale_objective(inner, L)
        obj: Objective = unit_inner
        if isinstance(self.objective, BarrierWrappedObjective):
            obj = BarrierWrappedObjective(unit_inner, self.objective.growth_rate)
        return replace(
            self,
            grid=GridSpec(self.grid.dim, self.grid.n, 1.0),
            schedule=self.schedule.rescaled(L),
            h=self.h / L,
            t_start=self.t_start / L,
            objective=obj,
        )


def _rescale_objective(spec: ObjectiveSpec, L: float) -> ObjectiveSpec:
    """y -> f(L y) on [-1, 1]^d for an objective living on [-L, L]^d."""

    def func(y):
        return spec.func(L * np.asarray(y))

    def grad(y):
        return spec.grad(L * np.asarray(y)) * L

    return replace(
        spec,
        lower=tuple(v / L for v in spec.lower),
        upper=tuple(v / L for v in spec.upper),
        func=func,
        grad=grad,
        known_min_points=tuple(tuple(c / L for c in q) for q in spec.known_min_points),
    )


@dataclass
class RunTrace:
    """Per-iteration record of a QHD run."""

    k: np.ndarray
    t: np.ndarray
    expected_f: np.ndarray
    gap: np.ndarray
    norm: np.ndarray
    f_min: float
    initial_expected_f: float
    final_field: ProbabilityField
    h: float
    final_state: WaveFunction | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.k)

    @property
    def kh(self) -> np.ndarray:
        return self.k * self.h

    @property
    def terminal_gap(self) -> float:
        return float(self.gap[-1]) if len(self.gap) else self.initial_expected_f - self.f_min

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        data = np.column_stack([self.k, self.t, self.expected_f, self.gap])
        np.savetxt(path, data, delimiter=",", header="k,t,expected_f,gap", comments="", fmt="%.17g")
        return path


def _grid_values(objective: Objective, grid: GridSpec) -> np.ndarray:
    v = np.asarray(objective.values(grid.points()), dtype=float)
    if not np.all(np.isfinite(v)):
        raise ConfigError("objective is not finite on every grid point")
    return v


def _phase(angle: np.ndarray) -> np.ndarray:
    """exp(-i angle) for real ``angle``."""
    out = np.empty(angle.shape, dtype=complex)
    np.cos(angle, out=out.real)
    np.sin(angle, out=out.imag)
    np.negative(out.imag, out=out.imag)
    return out


def _kinetic_factors(grid: GridSpec, lam: float, h: float) -> np.ndarray:
    return _phase(h * grid.frequencies**2 / (2.0 * lam))


def _apply_kinetic(amps: np.ndarray, grid: GridSpec, lam: float, h: float) -> np.ndarray:
    spec = np.fft.fftn(amps)
    e = _kinetic_factors(grid, lam, h)
    for ax in range(grid.dim):
        spec *= e.reshape([-1 if i == ax else 1 for i in range(grid.dim)])
    return np.fft.ifftn(spec)


def potential_phase_step(psi: WaveFunction, objective: Objective, lam: float, h: float) -> WaveFunction:
    """Multiply by exp(-i h lambda f) pointwise."""
    v = _grid_values(objective, psi.grid)
    return WaveFunction(psi.grid, psi.amplitudes * _phase(h * lam * v))


def kinetic_step(psi: WaveFunction, lam: float, h: float) -> WaveFunction:
    """Multiply momentum bin m by exp(-i h |kappa_m|^2 / (2 lambda))."""
    return WaveFunction(psi.grid, _apply_kinetic(psi.amplitudes, psi.grid, lam, h))


def trotter_step(psi: WaveFunction, objective: Objective, t_k: float, h: float, schedule: Schedule) -> WaveFunction:
    """One split step: potential phase then kinetic phase at lambda(t_k)."""
    lam = schedule(t_k)
    return kinetic_step(potential_phase_step(psi, objective, lam, h), lam, h)


def initial_wavefunction(config: QHDConfig) -> WaveFunction:
    if config.initial_state == "cos_product":
        return cos_product_state(config.grid)
    return uniform_state(config.grid)


def trajectory(config: QHDConfig, values: np.ndarray | None = None) -> Iterator[tuple[int, float, np.ndarray]]:
    """Yield ``(k, t_k, amplitudes)`` for k = 0..K.

    The yielded array is reused in place by the next step; copy it if needed.
    """
    grid = config.grid
    v = _grid_values(config.objective, grid) if values is None else values
    psi = initial_wavefunction(config).amplitudes.copy()
    yield 0, float(config.t_start), psi
    k2 = grid.frequencies**2
    shapes = [[-1 if i == ax else 1 for i in range(grid.dim)] for ax in range(grid.dim)]
    hv = config.h * v
    for k, t in enumerate(config.times(), start=1):
        lam = config.schedule(t)
        psi *= _phase(lam * hv)
        spec = np.fft.fftn(psi)
        e = _phase(config.h * k2 / (2.0 * lam))
        for shp in shapes:
            spec *= e.reshape(shp)
        psi = np.fft.ifftn(spec)
        yield k, float(t), psi


def evolve(config: QHDConfig, keep_state: bool = False, callback: Callable | None = None) -> RunTrace:
    """Run K steps and record the expected value and best-so-far gap.

    ``callback(k, t, amplitudes)`` is invoked after every step when given.
    """
    grid = config.grid
    v = _grid_values(config.objective, grid)
    K = config.iterations
    expected = np.empty(K)
    norms = np.empty(K)
    dvol = grid.cell_volume
    initial = None
    psi = None
    for k, t, psi in trajectory(config, v):
        mass = psi.real**2 + psi.imag**2
        total = mass.sum()
        if k == 0:
            initial = float(np.vdot(mass.ravel(), v.ravel()) / total)
            continue
        expected[k - 1] = np.vdot(mass.ravel(), v.ravel()) / total
        norms[k - 1] = math.sqrt(total * dvol)
        if callback is not None:
            callback(k, t, psi)
    f_min = float(config.objective.known_min_value)
    gap = np.minimum.accumulate(expected - f_min) if K else np.empty(0)
    final = WaveFunction(grid, np.array(psi))
    return RunTrace(
        k=np.arange(1, K + 1),
        t=config.times(),
        expected_f=expected,
        gap=gap,
        norm=norms,
        f_min=f_min,
        initial_expected_f=initial,
        final_field=probability(final),
        h=config.h,
        final_state=final if keep_state else None,
    )


def _hamiltonian_parts(grid: GridSpec, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = grid.size
    basis = np.eye(m, dtype=complex).reshape((m,) + grid.shape)
    axes = tuple(range(1, grid.dim + 1))
    k2 = grid.momentum_squared()
    cols = np.fft.ifftn(0.5 * k2 * np.fft.fftn(basis, axes=axes), axes=axes).reshape(m, m)
    kinetic = cols.T  # column j is the image of basis vector j
    return 0.5 * (kinetic + kinetic.conj().T), v.ravel()


def dense_propagator_reference(config: QHDConfig, substeps: int = 1) -> WaveFunction:
    """Evolve with the exact exponential of the grid Hamiltonian per (sub)step.

    lambda is frozen at the midpoint of each substep.  Limited to grids of at
    most 4096 points.
    """
    grid = config.grid
    if grid.size > DENSE_LIMIT:
        raise SizeLimit(f"dense reference limited to {DENSE_LIMIT} grid points, got {grid.size}")
    v = _grid_values(config.objective, grid)
    kinetic, pot = _hamiltonian_parts(grid, v)
    psi = initial_wavefunction(config).amplitudes.ravel()
    dt = config.h / substeps
    t0 = config.t_start
    for j in range(config.iterations * substeps):
        lam = config.schedule(t0 + (j + 0.5) * dt)
        ham = kinetic / lam + np.diag(lam * pot)
        w, q = np.linalg.eigh(ham)
        psi = q @ (np.exp(-1j * dt * w) * (q.conj().T @ psi))
    return WaveFunction(grid, psi.reshape(grid.shape))


# ---------------------------------------------------------------------------
# configuration documents


def load_document(path: str | Path) -> dict[str, Any]:
    """Read a JSON or TOML configuration document."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc


def schedule_from_document(doc: Mapping[str, Any] | str) -> Schedule:
    if isinstance(doc, str):
        doc = {"kind": doc}
    kind = str(doc.get("kind", "C"))
    if kind.lower() == "custom":
        return Schedule.custom(doc["table"])
    return Schedule(kind, mu=doc.get("mu"), alpha=doc.get("alpha"))


def config_from_document(doc: Mapping[str, Any]) -> QHDConfig:
    """Build a QHDConfig from keys function, L, N, h, K or T, schedule, ...

    The objective is the corpus function rescaled to [-L, L]^d and wrapped
    with the barrier.
    """
    try:
        spec = lookup(str(doc["function"]))
    except KeyError as exc:
        if "function" not in doc:
            raise ConfigError("config needs a 'function' key") from exc
        raise
    L = float(doc.get("L", 1.0))
    if not L > 0:
        raise ConfigError("L must be positive")
    n = int(doc.get("N", DESK_POINTS[spec.dim]))
    h = float(doc.get("h", 1e-3))
    if not h > 0:
        raise ConfigError("step size h must be positive")
    if "K" in doc:
        K = int(doc["K"])
    else:
        K = int(round(float(doc.get("T", 10.0)) / h))
    try:
        grid = GridSpec(spec.dim, n, L)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    objective = wrap_barrier(rescale_to_hypercube(spec, L), float(doc.get("growth_rate", 1e3)))
    sched = schedule_from_document(doc.get("schedule", "C"))
    t_start = doc.get("t_start")
    return QHDConfig(
        grid=grid,
        schedule=sched,
        h=h,
        iterations=K,
        objective=objective,
        t_start=None if t_start is None else float(t_start),
        initial_state=str(doc.get("initial_state", "uniform")),
        rng_seed=int(doc.get("seed", 0)),
    )
