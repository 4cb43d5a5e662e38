"""Objective functions used by the QHD benchmark.

Every objective is an immutable :class:`ObjectiveSpec` holding a vectorized
evaluator, a vectorized subgradient selection, a box domain and the known
optimum.  Evaluators accept arrays of shape ``(..., dim)`` and return arrays of
shape ``(...)``; subgradients return ``(..., dim)``.

Subgradient selection at kinks: every non-smooth summand contributes the
element of its own subdifferential of minimal norm (``np.sign(0) == 0``), which
gives 0 for ``|x|`` at 0 and the zero vector at the corpus minimizers with
symmetric kinks.  For ``max`` of smooth pieces (``WF``) the minimal-norm point
of the convex hull of the active gradients is returned.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "UnknownFunction",
    "DomainViolation",
    "ObjectiveSpec",
    "BarrierWrappedObjective",
    "BENCHMARK_NAMES",
    "ANALYSIS_NAMES",
    "available",
    "lookup",
    "evaluate",
    "clarke_subgradient",
    "rescale_to_hypercube",
    "to_hypercube",
    "from_hypercube",
    "wrap_barrier",
    "center",
]

DEFAULT_GROWTH_RATE = 1e3

Array = np.ndarray
VecFunc = Callable[[Array], Array]


class UnknownFunction(KeyError):
    """Raised when a name is not part of the corpus."""


class DomainViolation(ValueError):
    """Raised when an unwrapped objective is evaluated outside its box."""


@dataclass(frozen=True)
class ObjectiveSpec:
    """A test function on a box domain.

    ``func`` and ``grad`` are vectorized over leading axes.  ``mu`` is the
    strong-convexity modulus and is only set when ``convexity`` is
    ``"strongly_convex"``.
    """

    name: str
    dim: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    func: VecFunc = field(repr=False, compare=False)
    grad: VecFunc = field(repr=False, compare=False)
    known_min_value: float
    known_min_points: tuple[tuple[float, ...], ...]
    convexity: str = "nonconvex"
    mu: float | None = None
    min_point_tol: float = 1e-6
    note: str = ""

    def __post_init__(self) -> None:
        if len(self.lower) != self.dim or len(self.upper) != self.dim:
            raise ValueError("domain bounds must have length dim")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("empty domain")
        if self.convexity not in ("convex", "strongly_convex", "nonconvex"):
            raise ValueError(f"bad convexity tag {self.convexity!r}")

    @property
    def lower_array(self) -> Array:
        return np.asarray(self.lower, dtype=float)

    @property
    def upper_array(self) -> Array:
        return np.asarray(self.upper, dtype=float)

    @property
    def width(self) -> Array:
        return self.upper_array - self.lower_array

    def contains(self, points: Array) -> Array:
        """Boolean mask of points inside the closed box."""
        p = np.asarray(points, dtype=float)
        return np.all((p >= self.lower_array) & (p <= self.upper_array), axis=-1)

    def values(self, points: Array) -> Array:
        """Formula values without a domain check."""
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self.func(np.asarray(points, dtype=float))

    def gradients(self, points: Array) -> Array:
        """Subgradient selection without a domain check."""
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self.grad(np.asarray(points, dtype=float))


# ---------------------------------------------------------------------------
# helpers


def _safe_div(num: Array, den: Array) -> Array:
    """num/den with 0 where den == 0."""
    num, den = np.broadcast_arrays(np.asarray(num, float), np.asarray(den, float))
    out = np.zeros(num.shape)
    np.divide(num, den, out=out, where=den != 0)
    return out


def _sinc_prime(t: Array) -> Array:
    """Derivative of np.sinc."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < 1e-4
    ts = np.where(small, 1.0, t)
    big = (np.cos(np.pi * ts) - np.sinc(ts)) / ts
    return np.where(small, -(np.pi**2) * t / 3.0, big)


def _min_norm_hull(vectors: Array) -> Array:
    """Minimal-norm point in the convex hull of at most three vectors."""
    v = np.asarray(vectors, dtype=float)
    candidates = list(v)
    n = len(v)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = v[i], v[j]
            d = b - a
            dd = d @ d
            if dd > 0:
                s = np.clip(-(a @ d) / dd, 0.0, 1.0)
                candidates.append(a + s * d)
    if n == 3:
        a, b, c = v
        m = np.stack([b - a, c - a], axis=1)
        coef, *_ = np.linalg.lstsq(m, -a, rcond=None)
        if coef.min() >= 0 and coef.sum() <= 1:
            candidates.append(a + m @ coef)
    norms = [np.linalg.norm(c) for c in candidates]
    return candidates[int(np.argmin(norms))]


def _scalar_1d(f: Callable[[Array], Array]) -> VecFunc:
    return lambda x: f(x[..., 0])


def _grad_1d(g: Callable[[Array], Array]) -> VecFunc:
    return lambda x: g(x[..., 0])[..., None]


# ---------------------------------------------------------------------------
# benchmark functions


def _wf_pieces(x: Array) -> tuple[Array, Array]:
    a, b = x[..., 0], x[..., 1]
    u = 10.0 * a / (a + 0.1)
    du = 1.0 / (a + 0.1) ** 2
    vals = np.stack(
        [
            0.5 * (a + u + 2 * b**2),
            0.5 * (-a + u + 2 * b**2),
            0.5 * (a - u - 2 * b**2),
        ],
        axis=-1,
    )
    grads = np.stack(
        [
            np.stack([0.5 * (1 + du), 2 * b], axis=-1),
            np.stack([0.5 * (-1 + du), 2 * b], axis=-1),
            np.stack([0.5 * (1 - du), -2 * b], axis=-1),
        ],
        axis=-2,
    )
    return vals, grads


def _wf(x: Array) -> Array:
    return _wf_pieces(x)[0].max(axis=-1)


def _wf_grad(x: Array) -> Array:
    vals, grads = _wf_pieces(x)
    top = vals.max(axis=-1, keepdims=True)
    active = vals == top
    idx = np.argmax(vals, axis=-1)
    out = np.take_along_axis(grads, idx[..., None, None], axis=-2)[..., 0, :]
    ties = active.sum(axis=-1) > 1
    if np.any(ties):
        flat_out = out.reshape(-1, 2)
        flat_grads = grads.reshape(-1, 3, 2)
        flat_active = active.reshape(-1, 3)
        for i in np.flatnonzero(ties.ravel()):
            flat_out[i] = _min_norm_hull(flat_grads[i][flat_active[i]])
        out = flat_out.reshape(out.shape)
    return out


def _crowned(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    r = np.hypot(a, b)
    p = np.sin(a) * np.sin(b) * np.exp(100.0 - r / np.pi)
    return 1e-4 * (np.abs(p) + 1.0) ** 0.1


def _crowned_grad(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    r = np.hypot(a, b)
    e = np.exp(100.0 - r / np.pi)
    sa, sb = np.sin(a), np.sin(b)
    p = sa * sb * e
    dr = np.stack([_safe_div(a, r), _safe_div(b, r)], axis=-1)
    dp = np.stack([np.cos(a) * sb * e, sa * np.cos(b) * e], axis=-1)
    dp = dp - (p / np.pi)[..., None] * dr
    coef = 1e-5 * (np.abs(p) + 1.0) ** -0.9 * np.sign(p)
    return coef[..., None] * dp


def _bukin(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    return 100.0 * np.sqrt(np.abs(b - 0.01 * a**2)) + 0.01 * np.abs(a + 10.0)


def _bukin_grad(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    g = b - 0.01 * a**2
    c = 100.0 * _safe_div(np.sign(g), 2.0 * np.sqrt(np.abs(g)))
    ga = c * (-0.02 * a) + 0.01 * np.sign(a + 10.0)
    return np.stack([ga, c], axis=-1)


def _keane(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    ca, cb = np.cos(a) ** 2, np.cos(b) ** 2
    return -np.abs(ca**2 + cb**2 - 2 * ca * cb) / np.sqrt(a**2 + 2 * b**2)


def _keane_grad(x: Array) -> Array:
    # the numerator equals (cos^2 a - cos^2 b)^2 >= 0, so the abs is smooth
    a, b = x[..., 0], x[..., 1]
    diff = np.cos(a) ** 2 - np.cos(b) ** 2
    num = diff**2
    den = np.sqrt(a**2 + 2 * b**2)
    dnum = np.stack([-2 * diff * np.sin(2 * a), 2 * diff * np.sin(2 * b)], axis=-1)
    dden = np.stack([a / den, 2 * b / den], axis=-1)
    return -dnum / den[..., None] + (num / den**2)[..., None] * dden


_SCHWEFEL_C = 418.9828872724336


def _schwefel(x: Array) -> Array:
    a = x[..., 0]
    return _SCHWEFEL_C - a * np.sin(np.sqrt(np.abs(a)))


def _schwefel_grad(x: Array) -> Array:
    s = np.sqrt(np.abs(x[..., 0]))
    return (-(np.sin(s) + 0.5 * s * np.cos(s)))[..., None]


def _ackley(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    q = np.sqrt((a**2 + b**2) / 2.0)
    c = (np.cos(2 * np.pi * a) + np.cos(2 * np.pi * b)) / 2.0
    return -20.0 * np.exp(-0.2 * q) - np.exp(c) + 20.0 + np.e


def _ackley_grad(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    q = np.sqrt((a**2 + b**2) / 2.0)
    c = np.exp((np.cos(2 * np.pi * a) + np.cos(2 * np.pi * b)) / 2.0)
    radial = 2.0 * np.exp(-0.2 * q)
    ga = radial * _safe_div(a, q) + np.pi * np.sin(2 * np.pi * a) * c
    gb = radial * _safe_div(b, q) + np.pi * np.sin(2 * np.pi * b) * c
    return np.stack([ga, gb], axis=-1)


def _xsy(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    amp = np.sin(a) ** 2 + np.sin(b) ** 2 - np.exp(-(a**2) - b**2)
    env = np.exp(-np.sin(np.sqrt(np.abs(a))) ** 2 - np.sin(np.sqrt(np.abs(b))) ** 2)
    return amp * env


def _xsy_grad(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    gauss = np.exp(-(a**2) - b**2)
    amp = np.sin(a) ** 2 + np.sin(b) ** 2 - gauss
    sa, sb = np.sqrt(np.abs(a)), np.sqrt(np.abs(b))
    env = np.exp(-np.sin(sa) ** 2 - np.sin(sb) ** 2)
    d_amp_a = np.sin(2 * a) + 2 * a * gauss
    d_amp_b = np.sin(2 * b) + 2 * b * gauss
    # d/dx sin^2(sqrt|x|) = sign(x) sin(2s)/(2s), s = sqrt|x|
    d_env_a = -env * np.sign(a) * np.sinc(2 * sa / np.pi)
    d_env_b = -env * np.sign(b) * np.sinc(2 * sb / np.pi)
    return np.stack([d_amp_a * env + amp * d_env_a, d_amp_b * env + amp * d_env_b], axis=-1)


def _carrom(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    r = np.hypot(a, b)
    return -np.exp(np.abs(2 - 2 / np.pi * r)) * np.cos(a) ** 2 * np.cos(b) ** 2 / 30.0


def _carrom_grad(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    r = np.hypot(a, b)
    v = 2 - 2 / np.pi * r
    e = np.exp(np.abs(v))
    ca2, cb2 = np.cos(a) ** 2, np.cos(b) ** 2
    de = e * np.sign(v) * (-2 / np.pi)
    ga = de * _safe_div(a, r) * ca2 * cb2 - e * np.sin(2 * a) * cb2
    gb = de * _safe_div(b, r) * ca2 * cb2 - e * ca2 * np.sin(2 * b)
    return -np.stack([ga, gb], axis=-1) / 30.0


def _rana(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    sp = np.sqrt(np.abs(b - a + 1))
    sq = np.sqrt(np.abs(b + a + 1))
    return a * np.sin(sp) * np.cos(sq) + (b + 1) * np.sin(sq) * np.cos(sp)


def _rana_grad(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    p, q = b - a + 1, b + a + 1
    sp, sq = np.sqrt(np.abs(p)), np.sqrt(np.abs(q))
    # d sqrt|p| / dp, with the symmetric selection 0 on the kink line
    dsp = _safe_div(np.sign(p), 2 * sp)
    dsq = _safe_div(np.sign(q), 2 * sq)
    sin_p, cos_p, sin_q, cos_q = np.sin(sp), np.cos(sp), np.sin(sq), np.cos(sq)
    # partials of f with respect to sp and sq
    f_sp = a * cos_p * cos_q - (b + 1) * sin_q * sin_p
    f_sq = -a * sin_p * sin_q + (b + 1) * cos_q * cos_p
    ga = sin_p * cos_q + f_sp * (-dsp) + f_sq * dsq
    gb = sin_q * cos_p + f_sp * dsp + f_sq * dsq
    return np.stack([ga, gb], axis=-1)


def _dropwave(x: Array) -> Array:
    s = np.sum(x**2, axis=-1)
    return -(1 + np.cos(12 * np.sqrt(s))) / (2 + 0.5 * s)


def _dropwave_grad(x: Array) -> Array:
    s = np.sum(x**2, axis=-1)
    r = np.sqrt(s)
    den = 2 + 0.5 * s
    sin_over_r = 12.0 * np.sinc(12.0 * r / np.pi)
    coef = (12.0 * sin_over_r * den + (1 + np.cos(12 * r))) / den**2
    return coef[..., None] * x


def _layeb(x: Array) -> Array:
    w = x[..., :-1] * x[..., 1:]
    return np.sum(np.log(np.abs(w) + 0.001) + np.cos(x[..., :-1] + x[..., 1:]), axis=-1)


def _layeb_grad(x: Array) -> Array:
    lo, hi = x[..., :-1], x[..., 1:]
    w = lo * hi
    c = np.sign(w) / (np.abs(w) + 0.001)
    s = -np.sin(lo + hi)
    g = np.zeros_like(x)
    g[..., :-1] += c * hi + s
    g[..., 1:] += c * lo + s
    return g


def _damavandi(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    s = np.sinc(a - 2) * np.sinc(b - 2)
    return (1 - np.abs(s) ** 5) * (2 + (a - 7) ** 2 + 2 * (b - 7) ** 2)


def _damavandi_grad(x: Array) -> Array:
    a, b = x[..., 0], x[..., 1]
    sa, sb = np.sinc(a - 2), np.sinc(b - 2)
    s = sa * sb
    q = 2 + (a - 7) ** 2 + 2 * (b - 7) ** 2
    ds = -5 * np.abs(s) ** 4 * np.sign(s) * q
    ga = ds * _sinc_prime(a - 2) * sb + (1 - np.abs(s) ** 5) * 2 * (a - 7)
    gb = ds * sa * _sinc_prime(b - 2) + (1 - np.abs(s) ** 5) * 4 * (b - 7)
    return np.stack([ga, gb], axis=-1)


# ---------------------------------------------------------------------------
# analysis functions (1D)


def _abs(x: Array) -> Array:
    return np.abs(x)


def _square(x: Array) -> Array:
    return x**2


def _expabs(x: Array) -> Array:
    return np.expm1(np.abs(x))


def _expabs_grad(x: Array) -> Array:
    return np.sign(x) * np.exp(np.abs(x))


_KEANE_MIN_X = 1.3932490753020113

_TABLE: dict[str, ObjectiveSpec] = {}


def _register(spec: ObjectiveSpec) -> None:
    _TABLE[spec.name] = spec


_register(ObjectiveSpec("WF", 2, (-10.0, -10.0), (10.0, 10.0), _wf, _wf_grad, 0.0, ((0.0, 0.0),)))
_register(
    ObjectiveSpec(
        "CROWNEDCROSS", 2, (-10.0, -10.0), (15.0, 15.0), _crowned, _crowned_grad, 1e-4, ((0.0, 0.0),)
    )
)
_register(
    ObjectiveSpec("BUKIN06", 2, (-15.0, -3.0), (-5.0, 3.0), _bukin, _bukin_grad, 0.0, ((-10.0, 1.0),))
)
_register(
    ObjectiveSpec(
        "KEANE",
        2,
        (1e-8, 1e-8),
        (10.0, 10.0),
        _keane,
        _keane_grad,
        -0.6736675211468547,
        ((_KEANE_MIN_X, 1e-8),),
        note=(
            "the commonly printed optimum f(1.60086, 0.468498) = 0.673207 does not satisfy "
            "this formula; the stored optimum is the formula's minimum on the box"
        ),
    )
)
_register(
    ObjectiveSpec(
        "SCHWEFEL", 1, (-500.0,), (500.0,), _schwefel, _schwefel_grad, 0.0, ((420.9687474737558,),)
    )
)
_register(ObjectiveSpec("ACKLEY", 2, (-15.0, -15.0), (30.0, 30.0), _ackley, _ackley_grad, 0.0, ((0.0, 0.0),)))
_register(ObjectiveSpec("XINSHEYANG04", 2, (-10.0, -10.0), (10.0, 10.0), _xsy, _xsy_grad, -1.0, ((0.0, 0.0),)))
_register(
    ObjectiveSpec(
        "CARROMTABLE",
        2,
        (-10.0, -10.0),
        (10.0, 10.0),
        _carrom,
        _carrom_grad,
        -24.1568155165,
        tuple((sa * 9.646157266349, sb * 9.646157266349) for sa in (1, -1) for sb in (1, -1)),
    )
)
_register(
    ObjectiveSpec(
        "RANA",
        2,
        (-500.0, -500.0),
        (500.0, 500.0),
        _rana,
        _rana_grad,
        -500.802160296664,
        ((-300.3376328023, 500.0),),
        min_point_tol=1e-3,
    )
)
_register(
    ObjectiveSpec(
        "DROPWAVE", 3, (-5.12,) * 3, (5.12,) * 3, _dropwave, _dropwave_grad, -1.0, ((0.0, 0.0, 0.0),)
    )
)
_register(
    ObjectiveSpec(
        "LAYEB04",
        3,
        (-10.0,) * 3,
        (10.0,) * 3,
        _layeb,
        _layeb_grad,
        2 * np.log(0.001) - 2,
        tuple((0.0, (2 * j - 1) * np.pi, 0.0) for j in (-1, 0, 1, 2)),
    )
)
_register(
    ObjectiveSpec(
        "DAMAVANDI",
        2,
        (0.0, 0.0),
        (14.0, 14.0),
        _damavandi,
        _damavandi_grad,
        0.0,
        ((2 + 1e-10, 2 + 1e-10),),
    )
)
_register(
    ObjectiveSpec(
        "ABS", 1, (-1.0,), (1.0,), _scalar_1d(_abs), _grad_1d(np.sign), 0.0, ((0.0,),), "convex"
    )
)
_register(
    ObjectiveSpec(
        "SQUARE",
        1,
        (-1.0,),
        (1.0,),
        _scalar_1d(_square),
        _grad_1d(lambda x: 2 * x),
        0.0,
        ((0.0,),),
        "strongly_convex",
        mu=2.0,
    )
)
_register(
    ObjectiveSpec(
        "EXPABS",
        1,
        (-1.0,),
        (1.0,),
        _scalar_1d(_expabs),
        _grad_1d(_expabs_grad),
        0.0,
        ((0.0,),),
        "strongly_convex",
        mu=1.0,
    )
)

BENCHMARK_NAMES: tuple[str, ...] = (
    "WF",
    "CROWNEDCROSS",
    "BUKIN06",
    "KEANE",
    "SCHWEFEL",
    "ACKLEY",
    "XINSHEYANG04",
    "CARROMTABLE",
    "RANA",
    "DROPWAVE",
    "LAYEB04",
    "DAMAVANDI",
)
ANALYSIS_NAMES: tuple[str, ...] = ("ABS", "SQUARE", "EXPABS")


def available() -> tuple[str, ...]:
    """Names of every corpus function, benchmark set first."""
    return BENCHMARK_NAMES + ANALYSIS_NAMES


def lookup(name: str) -> ObjectiveSpec:
    """Return the corpus entry called ``name`` (case-insensitive)."""
    try:
        return _TABLE[name.upper()]
    except KeyError:
        raise UnknownFunction(f"unknown function {name!r}; choose from {', '.join(available())}") from None


def _as_point(spec: ObjectiveSpec, p) -> Array:
    x = np.asarray(p, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != spec.dim:
        raise ValueError(f"{spec.name} expects points of dimension {spec.dim}, got shape {x.shape}")
    return x


def evaluate(spec: ObjectiveSpec, p) -> float | Array:
    """Evaluate ``spec`` at ``p``; raises DomainViolation outside the box."""
    x = _as_point(spec, p)
    if not np.all(spec.contains(x)):
        raise DomainViolation(f"{spec.name}: point outside domain {list(zip(spec.lower, spec.upper))}")
    out = spec.values(x)
    return float(out) if np.ndim(out) == 0 else out


def clarke_subgradient(spec: ObjectiveSpec, p) -> Array:
    """Deterministic element of the Clarke subdifferential at ``p``."""
    return spec.gradients(_as_point(spec, p))


# ---------------------------------------------------------------------------
# affine rescaling and barrier


def to_hypercube(spec: ObjectiveSpec, half_width: float, x) -> Array:
    """Map original coordinates into [-L, L]^d."""
    lo, w = spec.lower_array, spec.width
    return (np.asarray(x, dtype=float) - lo) * (2 * half_width) / w - half_width


def from_hypercube(spec: ObjectiveSpec, half_width: float, y) -> Array:
    """Map hypercube coordinates back to the original box."""
    lo, w = spec.lower_array, spec.width
    return lo + w / (2 * half_width) * (np.asarray(y, dtype=float) + half_width)


def rescale_to_hypercube(spec: ObjectiveSpec, half_width: float) -> ObjectiveSpec:
    """The same function expressed on [-L, L]^d with ``L = half_width``."""
    if not (np.isfinite(half_width) and half_width > 0):
        raise ValueError("half_width must be finite and positive")
    L = float(half_width)
    scale = spec.width / (2 * L)

    def func(y: Array) -> Array:
        return spec.func(from_hypercube(spec, L, y))

    def grad(y: Array) -> Array:
        return spec.grad(from_hypercube(spec, L, y)) * scale

    mins = tuple(tuple(float(c) for c in to_hypercube(spec, L, q)) for q in spec.known_min_points)
    mu = None if spec.mu is None else spec.mu * float(np.min(scale)) ** 2
    return dataclasses.replace(
        spec,
        lower=(-L,) * spec.dim,
        upper=(L,) * spec.dim,
        func=func,
        grad=grad,
        known_min_points=mins,
        mu=mu,
    )


def center(spec: ObjectiveSpec, which: int = 0) -> ObjectiveSpec:
    """Shift so that the chosen minimizer sits at the origin with value 0."""
    shift = np.asarray(spec.known_min_points[which], dtype=float)
    fmin = spec.known_min_value

    def func(y: Array) -> Array:
        return spec.func(y + shift) - fmin

    def grad(y: Array) -> Array:
        return spec.grad(y + shift)

    return dataclasses.replace(
        spec,
        lower=tuple(float(v) for v in spec.lower_array - shift),
        upper=tuple(float(v) for v in spec.upper_array - shift),
        func=func,
        grad=grad,
        known_min_value=0.0,
        known_min_points=tuple(
            tuple(float(c) for c in np.asarray(q) - shift) for q in spec.known_min_points
        ),
    )


@dataclass(frozen=True)
class BarrierWrappedObjective:
    """``inner`` inside its box; linear growth in the distance outside."""

    inner: ObjectiveSpec
    growth_rate: float = DEFAULT_GROWTH_RATE

    def __post_init__(self) -> None:
        if not self.growth_rate > 0:
            raise ValueError("growth_rate must be positive")

    @property
    def name(self) -> str:
        return self.inner.name

    @property
    def dim(self) -> int:
        return self.inner.dim

    @property
    def lower(self) -> tuple[float, ...]:
        return self.inner.lower

    @property
    def upper(self) -> tuple[float, ...]:
        return self.inner.upper

    @property
    def known_min_value(self) -> float:
        return self.inner.known_min_value

    @property
    def known_min_points(self) -> tuple[tuple[float, ...], ...]:
        return self.inner.known_min_points

    def values(self, points: Array) -> Array:
        p = np.asarray(points, dtype=float)
        clipped = np.clip(p, self.inner.lower_array, self.inner.upper_array)
        dist = np.linalg.norm(p - clipped, axis=-1)
        return self.inner.values(clipped) + self.growth_rate * dist

    def gradients(self, points: Array) -> Array:
        p = np.asarray(points, dtype=float)
        clipped = np.clip(p, self.inner.lower_array, self.inner.upper_array)
        offset = p - clipped
        dist = np.linalg.norm(offset, axis=-1, keepdims=True)
        inside_axes = offset == 0
        g = self.inner.gradients(clipped) * inside_axes
        return g + self.growth_rate * _safe_div(offset, np.broadcast_to(dist, offset.shape))

    def __call__(self, p) -> float | Array:
        out = self.values(_as_point(self.inner, p))
        return float(out) if np.ndim(out) == 0 else out


def wrap_barrier(spec: ObjectiveSpec, growth_rate: float = DEFAULT_GROWTH_RATE) -> BarrierWrappedObjective:
    """Extend ``spec`` continuously outside its box with a steep barrier."""
    return BarrierWrappedObjective(spec, float(growth_rate))


def grid_values(objective, points: Sequence | Array) -> Array:
    """Vectorized values for either an ObjectiveSpec or a barrier wrapper."""
    return objective.values(np.asarray(points, dtype=float))
