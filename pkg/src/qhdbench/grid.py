"""Uniform periodic grids on [-L, L)^d, wavefunctions and probability fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "GridSpec",
    "WaveFunction",
    "ProbabilityField",
    "uniform_state",
    "cos_product_state",
    "plane_wave",
    "to_momentum",
    "to_position",
    "probability",
    "sample",
    "save_csv",
    "save_binary",
]


@dataclass(frozen=True)
class GridSpec:
    """``n`` points per axis on ``[-half_width, half_width)`` in ``dim`` dimensions."""

    dim: int
    n: int
    half_width: float

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError("points per axis must be a power of two >= 8")
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ValueError("half_width must be finite and positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        """Coordinates x_j = -L + j * 2L/N along one axis."""
        return -self.half_width + self.spacing * np.arange(self.n)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """kappa_m = pi m / L in FFT bin order."""
        return np.pi * np.fft.fftfreq(self.n, d=1.0 / self.n) / self.half_width

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    def points(self) -> np.ndarray:
        """All grid points, shape ``(n, ..., n, dim)``."""
        return np.stack(self.mesh(), axis=-1)

    def momentum_squared(self) -> np.ndarray:
        """|kappa|^2 on the momentum grid, shape ``self.shape``."""
        k2 = self.frequencies**2
        out = np.zeros(self.shape)
        for ax in range(self.dim):
            out = out + k2.reshape([-1 if i == ax else 1 for i in range(self.dim)])
        return out


@dataclass(frozen=True)
class WaveFunction:
    """Complex amplitudes on a grid, in position or momentum representation."""

    grid: GridSpec
    amplitudes: np.ndarray = field(repr=False)
    representation: str = "position"

    def __post_init__(self) -> None:
        if self.amplitudes.shape != self.grid.shape:
            raise ValueError(f"amplitudes shape {self.amplitudes.shape} != grid shape {self.grid.shape}")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.cell_volume))

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes / self.norm(), self.representation)


@dataclass(frozen=True)
class ProbabilityField:
    """Discrete probability mass per grid point."""

    grid: GridSpec
    mass: np.ndarray = field(repr=False)

    def expectation(self, values: np.ndarray) -> float:
        return float(np.sum(self.mass * values))


def _normalize(grid: GridSpec, amps: np.ndarray) -> np.ndarray:
    return amps / np.sqrt(np.sum(np.abs(amps) ** 2) * grid.cell_volume)


def uniform_state(grid: GridSpec) -> WaveFunction:
    """Constant amplitude 1/sqrt(N * spacing)^d."""
    amp = 1.0 / np.sqrt(grid.size * grid.cell_volume)
    return WaveFunction(grid, np.full(grid.shape, amp, dtype=complex))


def cos_product_state(grid: GridSpec) -> WaveFunction:
    """Product of cos(pi x_j / 2L) over the axes."""
    c = np.cos(np.pi * grid.axis / (2 * grid.half_width))
    amps = c
    for _ in range(grid.dim - 1):
        amps = np.multiply.outer(amps, c)
    return WaveFunction(grid, _normalize(grid, amps.astype(complex)))


def plane_wave(grid: GridSpec, m: tuple[int, ...] | int) -> WaveFunction:
    """exp(i kappa_m . x), normalized."""
    m = (m,) * grid.dim if np.isscalar(m) else tuple(m)
    phase = sum(np.pi * mj / grid.half_width * xj for mj, xj in zip(m, grid.mesh()))
    return WaveFunction(grid, _normalize(grid, np.exp(1j * phase)))


def to_momentum(psi: WaveFunction) -> WaveFunction:
    """Unitary DFT; bin order follows ``GridSpec.frequencies``."""
    return WaveFunction(psi.grid, np.fft.fftn(psi.amplitudes, norm="ortho"), "momentum")


def to_position(psi_hat: WaveFunction) -> WaveFunction:
    return WaveFunction(psi_hat.grid, np.fft.ifftn(psi_hat.amplitudes, norm="ortho"), "position")


def probability(psi: WaveFunction) -> ProbabilityField:
    """|psi|^2 * cell volume, renormalized to sum to one."""
    mass = np.abs(psi.amplitudes) ** 2
    return ProbabilityField(psi.grid, mass / mass.sum())


def sample(field: ProbabilityField, rng_seed: int, count: int) -> np.ndarray:
    """``count`` i.i.d. grid points drawn from ``field``, shape ``(count, dim)``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    flat = field.mass.ravel()
    idx = rng.choice(flat.size, size=count, p=flat / flat.sum())
    coords = np.unravel_index(idx, field.grid.shape)
    return np.stack([field.grid.axis[c] for c in coords], axis=-1)


def _coordinate_columns(grid: GridSpec) -> tuple[list[str], np.ndarray]:
    names = [f"x{i + 1}" for i in range(grid.dim)]
    return names, grid.points().reshape(-1, grid.dim)


def save_csv(obj: WaveFunction | ProbabilityField, path: str | Path) -> Path:
    """Write coordinates plus re/im (wavefunction) or mass (field)."""
    path = Path(path)
    names, coords = _coordinate_columns(obj.grid)
    if isinstance(obj, WaveFunction):
        a = obj.amplitudes.ravel()
        if obj.representation == "momentum":
            kappa = np.stack(
                np.meshgrid(*([obj.grid.frequencies] * obj.grid.dim), indexing="ij"), axis=-1
            ).reshape(-1, obj.grid.dim)
            names, coords = [f"k{i + 1}" for i in range(obj.grid.dim)], kappa
        data = np.column_stack([coords, a.real, a.imag])
        names = names + ["re", "im"]
    else:
        data = np.column_stack([coords, obj.mass.ravel()])
        names = names + ["mass"]
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")
    return path


def save_binary(obj: WaveFunction | ProbabilityField, path: str | Path) -> Path:
    """Row-major ``.npy`` dump of the amplitude or mass array."""
    path = Path(path)
    arr = obj.amplitudes if isinstance(obj, WaveFunction) else obj.mass
    np.save(path, np.ascontiguousarray(arr))
    return path
