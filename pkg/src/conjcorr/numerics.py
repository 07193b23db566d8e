"""Grids, quadrature, Fourier sums, Hermite functions, CDF inversion and RNG.

Everything here works on uniform grids in natural units (hbar = 1).
The Fourier convention is

    phi~(p) = (2 pi)^(-1/2) * integral dq exp(-i p q) phi(q),

evaluated as a direct quadrature sum so the target grid is free to differ
from the FFT-reciprocal grid.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import BPoly, PchipInterpolator

from .errors import (
    HermiteRangeError,
    InvalidRangeError,
    LengthMismatchError,
    NotNormalizedError,
)

MIN_POINTS = 16
MAX_HERMITE_ORDER = 64
DEFAULT_POINTS = 1024

_TWO_PI_SQRT = math.sqrt(2.0 * math.pi)
# rows per block when materialising exp(i x y) kernels
_BLOCK = 1024


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n_points: int

    @property
    def step(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return self.x_min + self.step * np.arange(self.n_points)

    @property
    def span(self) -> float:
        return self.x_max - self.x_min

    def contains(self, lo: float, hi: float) -> bool:
        return self.x_min <= lo and hi <= self.x_max


def make_grid(x_min: float, x_max: float, n_points: int) -> GridSpec:
    """Uniform grid with exact endpoints.

    At least 16 points are required; smaller grids can still be described
    with :class:`GridSpec` directly.
    """
    if not (np.isfinite(x_min) and np.isfinite(x_max)) or not x_max > x_min:
        raise InvalidRangeError(f"need x_max > x_min, got [{x_min}, {x_max}]")
    if int(n_points) != n_points or n_points < MIN_POINTS:
        raise InvalidRangeError(f"n_points must be an integer >= {MIN_POINTS}, got {n_points}")
    return GridSpec(float(x_min), float(x_max), int(n_points))


def centered_grid(center: float, half_span: float, n_points: int = DEFAULT_POINTS) -> GridSpec:
    return make_grid(center - half_span, center + half_span, n_points)


def _check_length(values, grid: GridSpec) -> np.ndarray:
    values = np.asarray(values)
    if values.shape[-1] != grid.n_points:
        raise LengthMismatchError(
            f"{values.shape[-1]} values for a grid of {grid.n_points} points"
        )
    return values


def integrate_values(values, grid: GridSpec, axis: int = -1):
    """Composite Simpson rule of sampled values (any trailing axis)."""
    values = np.asarray(values)
    if values.shape[axis] != grid.n_points:
        raise LengthMismatchError(
            f"{values.shape[axis]} values for a grid of {grid.n_points} points"
        )
    return np.tensordot(simpson_weights(grid), values, axes=([0], [axis]))


def integrate(values, grid: GridSpec) -> float:
    return float(integrate_values(_check_length(values, grid), grid))


@functools.lru_cache(maxsize=64)
def simpson_weights(grid: GridSpec) -> np.ndarray:
    """Composite Simpson weights for this grid, symmetric under reversal.

    Simpson is linear in f, so integrating the identity matrix recovers
    scipy's weights. For an even point count scipy corrects only the last
    interval; averaging with the mirrored weights keeps the order of
    accuracy and makes odd integrands on symmetric grids vanish exactly.
    """
    w = simpson(np.eye(grid.n_points), dx=grid.step, axis=1)
    w = 0.5 * (w + w[::-1])
    w.setflags(write=False)
    return w


def fourier_sum(values, source: GridSpec, targets, sign: int, derivative: int = 0) -> np.ndarray:
    """Quadrature Fourier sum and its derivatives at arbitrary target points.

    Returns ``(2 pi)^(-1/2) sum_k w_k (s i x_k)^m exp(s i t x_k) values_k``
    where ``s = sign`` and ``m = derivative``, i.e. the m-th derivative in
    ``t`` of the transform of ``values``.
    """
    values = _check_length(values, source).astype(complex)
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    x = source.points
    weighted = simpson_weights(source) * values
    if derivative:
        weighted = weighted * (sign * 1j * x) ** derivative
    out = np.empty(targets.shape, dtype=complex)
    flat = targets.ravel()
    res = out.reshape(-1)
    for start in range(0, flat.size, _BLOCK):
        block = flat[start:start + _BLOCK]
        res[start:start + _BLOCK] = np.exp(sign * 1j * np.outer(block, x)) @ weighted
    return out / _TWO_PI_SQRT


def transform_amplitudes(values, source: GridSpec, target: GridSpec, sign: int,
                         derivative: int = 0) -> np.ndarray:
    return fourier_sum(values, source, target.points, sign, derivative)


def fourier_transform(wf, grid: GridSpec | None = None):
    """Position -> momentum (or momentum -> position) representation.

    ``grid`` defaults to the wavefunction's stored conjugate grid. The
    result keeps a reference back to its source so that ``out.dual`` is
    exactly ``wf``.
    """
    from .states import WaveFunction

    target = grid or wf.conjugate_grid or wf.grid
    sign = -1 if wf.representation == "position" else 1
    amps = transform_amplitudes(wf.amplitudes, wf.grid, target, sign)
    norm = integrate(np.abs(amps) ** 2, target)
    if abs(norm - 1.0) > 1e-6:
        from .errors import GridTooCoarseError

        raise GridTooCoarseError(
            f"transform normalisation {norm:.10f} deviates from 1 by more than 1e-6"
        )
    other = "momentum" if wf.representation == "position" else "position"
    out = WaveFunction(target, amps, other, wf.grid)
    out.__dict__["dual"] = wf
    return out


def inverse_fourier_transform(wf, grid: GridSpec | None = None):
    if wf.representation != "momentum":
        raise ValueError("inverse transform expects a momentum-representation wavefunction")
    return fourier_transform(wf, grid)


def hermite_function(n: int, x):
    """Orthonormal oscillator eigenfunction h_n(x) by the stable three-term recurrence."""
    if int(n) != n or n < 0:
        raise HermiteRangeError(f"order must be a nonnegative integer, got {n}")
    if n > MAX_HERMITE_ORDER:
        raise HermiteRangeError(f"order {n} exceeds supported maximum {MAX_HERMITE_ORDER}")
    return hermite_functions(int(n), x)[-1]


def hermite_functions(n_max: int, x) -> np.ndarray:
    """Stack ``[h_0(x), ..., h_{n_max}(x)]``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-x ** 2 / 2)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, n_max):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


@dataclass(frozen=True, eq=False)
class MonotoneMap:
    """Monotone map known at sample points, evaluable anywhere in its input range.

    ``fn`` is the exact evaluator when one exists (e.g. a Newton-polished
    quantile); otherwise evaluation falls back to PCHIP through the samples.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    orientation: str = "increasing"
    fn: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.orientation not in ("increasing", "decreasing"):
            raise ValueError(f"unknown orientation {self.orientation!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.inputs[0], self.inputs[-1]
        if np.any((x < min(lo, hi)) | (x > max(lo, hi))):
            raise InvalidRangeError("argument outside the map's input range")
        if self.fn is not None:
            return self.fn(x)
        return self._pchip(x)

    @functools.cached_property
    def _pchip(self):
        return PchipInterpolator(self.inputs, self.outputs, extrapolate=False)

    def is_strictly_monotone(self) -> bool:
        d = np.diff(self.outputs)
        return bool(np.all(d > 0)) if self.orientation == "increasing" else bool(np.all(d < 0))


class CDF:
    """Cumulative distribution of a gridded density, with accurate inversion.

    The cumulative integral at grid points uses the trapezoid rule with
    Euler-Maclaurin end corrections, which telescope, so the error does not
    accumulate along the grid. Between grid points the CDF is a Hermite
    polynomial (quintic when the density slope is known, otherwise PCHIP).
    Lower and upper tails are kept separately so quantiles near 1 do not lose
    precision to cancellation.
    """

    def __init__(self, grid: GridSpec, density, slope=None, third=None):
        f = _check_length(np.asarray(density, dtype=float), grid)
        if np.any(f < -1e-14 * max(f.max(), 1.0)):
            raise ValueError("density must be nonnegative")
        f = np.clip(f, 0.0, None)
        h = grid.step
        x = grid.points
        df = np.gradient(f, h, edge_order=2) if slope is None else np.asarray(slope, float)
        trap = np.concatenate(([0.0], np.cumsum(0.5 * h * (f[1:] + f[:-1]))))
        rtrap = np.concatenate((np.cumsum((0.5 * h * (f[1:] + f[:-1]))[::-1])[::-1], [0.0]))
        lower = trap - h * h / 12.0 * (df - df[0])
        upper = rtrap - h * h / 12.0 * (df[-1] - df)
        if third is not None:
            d3 = np.asarray(third, float)
            lower += h ** 4 / 720.0 * (d3 - d3[0])
            upper += h ** 4 / 720.0 * (d3[-1] - d3)
        total = lower[-1]
        if not total > 0:
            from .errors import DegenerateDensityError

            raise DegenerateDensityError("density has zero total mass")
        self.grid = grid
        self.total = float(total)
        self.lower = np.maximum.accumulate(np.clip(lower / total, 0.0, 1.0))
        self.upper = np.minimum.accumulate(np.clip(upper / total, 0.0, 1.0))
        self.density = f / total
        if slope is None:
            self._lo_poly = PchipInterpolator(x, self.lower, extrapolate=False)
            self._up_poly = PchipInterpolator(x, self.upper, extrapolate=False)
        else:
            s = df / total
            self._lo_poly = BPoly.from_derivatives(
                x, np.column_stack((self.lower, self.density, s)), extrapolate=False)
            self._up_poly = BPoly.from_derivatives(
                x, np.column_stack((self.upper, -self.density, -s)), extrapolate=False)
        self._lo_d = self._lo_poly.derivative()
        self._up_d = self._up_poly.derivative()

    def _clip(self, x):
        return np.clip(np.asarray(x, dtype=float), self.grid.x_min, self.grid.x_max)

    def cdf(self, x):
        return np.clip(self._lo_poly(self._clip(x)), 0.0, 1.0)

    def sf(self, x):
        return np.clip(self._up_poly(self._clip(x)), 0.0, 1.0)

    def quantile(self, u, upper: bool = False):
        """Solve F(x) = u, or the survival equation S(x) = u when ``upper``."""
        u = np.asarray(u, dtype=float)
        shape = u.shape
        u = u.ravel()
        x = self.grid.points
        if upper:
            # S decreases: search on the reversed, increasing sequence
            table = self.upper[::-1]
            k = x.size - np.searchsorted(table, u, side="left")
            k = np.clip(k, 1, x.size - 1)
            lo_i, hi_i = k - 1, k
            poly, dpoly, sgn = self._up_poly, self._up_d, -1.0
            v_lo, v_hi = self.upper[lo_i], self.upper[hi_i]
        else:
            k = np.searchsorted(self.lower, u, side="right")
            k = np.clip(k, 1, x.size - 1)
            lo_i, hi_i = k - 1, k
            poly, dpoly, sgn = self._lo_poly, self._lo_d, 1.0
            v_lo, v_hi = self.lower[lo_i], self.lower[hi_i]
        lo = x[lo_i].copy()
        hi = x[hi_i].copy()
        span = v_hi - v_lo
        frac = np.where(span > 0, (u - v_lo) / np.where(span > 0, span, 1.0), 0.5)
        xs = lo + np.clip(frac, 0.0, 1.0) * (hi - lo)
        for _ in range(60):
            r = sgn * (poly(xs) - u)
            # bracket update: r > 0 means xs is past the root
            hi = np.where(r > 0, xs, hi)
            lo = np.where(r <= 0, xs, lo)
            d = sgn * dpoly(xs)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(d > 0, r / d, np.inf)
            cand = xs - step
            bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
            new = np.where(bad, 0.5 * (lo + hi), cand)
            done = np.abs(new - xs) <= 1e-15 * (1.0 + np.abs(xs))
            xs = new
            if np.all(done):
                break
        return xs.reshape(shape)


def inverse_cdf(density, grid: GridSpec, slope=None, third=None) -> MonotoneMap:
    """Quantile map u -> x of a gridded density.

    ``slope``/``third`` are optional exact first and third derivatives of
    the density; when given, the inversion is accurate to near machine
    precision instead of PCHIP order.
    """
    density = _check_length(np.asarray(density, dtype=float), grid)
    mass = integrate(density, grid)
    if abs(mass - 1.0) > 1e-6:
        raise NotNormalizedError(f"density integrates to {mass:.10f}, expected 1 within 1e-6")
    cdf = CDF(grid, density, slope, third)
    keep = np.concatenate(([True], np.diff(cdf.lower) > 0))
    return MonotoneMap(cdf.lower[keep], grid.points[keep], "increasing", cdf.quantile)


def seeded_stream(seed: int) -> np.random.Generator:
    """Deterministic uniform stream: numpy's PCG64 bit generator seeded via SeedSequence."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def substreams(seed: int, count: int) -> list[np.random.Generator]:
    """Independent child streams; child i depends only on (seed, i)."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def gauss_hermite_average(fn, center, sigma: float, order: int = 64):
    """Gaussian-weighted average E[fn(X)], X ~ N(center, sigma^2), by Gauss-Hermite."""
    t, w = np.polynomial.hermite.hermgauss(order)
    center = np.atleast_1d(np.asarray(center, dtype=float))
    pts = center[:, None] + math.sqrt(2.0) * sigma * t[None, :]
    vals = fn(pts)
    return (vals @ w) / math.sqrt(math.pi)


def gaussian_smooth(grid: GridSpec, values, centers, sigma: float, fn=None) -> np.ndarray:
    """integral N(x; c, sigma^2) f(x) dx for each centre c.

    Uses the grid samples when the kernel is resolved by at least three grid
    steps; narrower kernels fall back to Gauss-Hermite nodes evaluated through
    ``fn`` (an exact evaluator of f at arbitrary points).
    """
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    if sigma >= 3.0 * grid.step or fn is None:
        x = grid.points
        w = simpson_weights(grid) * np.asarray(values)
        out = np.empty(centers.shape, dtype=np.result_type(values, float))
        norm = 1.0 / (sigma * _TWO_PI_SQRT)
        for start in range(0, centers.size, _BLOCK):
            c = centers[start:start + _BLOCK]
            k = np.exp(-((c[:, None] - x[None, :]) ** 2) / (2.0 * sigma * sigma))
            out[start:start + _BLOCK] = norm * (k @ w)
        return out
    return gauss_hermite_average(fn, centers, sigma)
