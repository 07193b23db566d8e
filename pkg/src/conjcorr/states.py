"""One-mode test states and their moments.

A :class:`WaveFunction` lives on one grid in one representation and knows
the grid of its conjugate representation. ``wf.dual`` is the transformed
wavefunction (cached), and spectral derivatives/point evaluations go
through the dual, i.e. differentiation happens in the conjugate space.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import EdgeLeakageError, GridSpanError, HermiteRangeError, ZeroStateError
from .numerics import GridSpec

EDGE_TOLERANCE = 1e-12
SPAN_SIGMAS = 8.0


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: GridSpec
    amplitudes: np.ndarray
    representation: str = "position"
    conjugate_grid: GridSpec | None = None

    def __post_init__(self):
        if self.representation not in ("position", "momentum"):
            raise ValueError(f"unknown representation {self.representation!r}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    @functools.cached_property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return numerics.integrate(self.density, self.grid)

    @functools.cached_property
    def dual(self) -> "WaveFunction":
        return numerics.fourier_transform(self)

    def position(self) -> "WaveFunction":
        return self if self.representation == "position" else self.dual

    def momentum(self) -> "WaveFunction":
        return self if self.representation == "momentum" else self.dual

    @property
    def _sign(self) -> int:
        # sign of the exponent when rebuilding this representation from the dual
        return 1 if self.representation == "position" else -1

    def evaluate(self, x, derivative: int = 0) -> np.ndarray:
        """Spectral evaluation of the amplitude (or a derivative) at arbitrary points."""
        d = self.dual
        return numerics.fourier_sum(d.amplitudes, d.grid, x, self._sign, derivative)

    def derivative(self, order: int) -> np.ndarray:
        if order == 0:
            return self.amplitudes
        cache = self.__dict__.setdefault("_derivatives", {})
        if order not in cache:
            out = self.evaluate(self.points, order)
            out.setflags(write=False)
            cache[order] = out
        return cache[order]

    def density_derivatives(self):
        """(f, f', f''') of f = |amplitude|^2 on the grid, spectrally."""
        a = self.amplitudes
        a1, a2, a3 = (self.derivative(k) for k in (1, 2, 3))
        f1 = 2.0 * np.real(np.conj(a) * a1)
        f3 = 2.0 * np.real(np.conj(a) * a3) + 6.0 * np.real(np.conj(a1) * a2)
        return self.density, f1, f3

    def with_phase(self, phase: float) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes * cmath.exp(1j * phase),
                            self.representation, self.conjugate_grid)


@dataclass(frozen=True)
class GaussianPacketParams:
    """Free spreading Gaussian packet; m and t0 only enter as t0/m."""

    alpha: float
    beta: float = 0.0
    t0_over_m: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def delta_p(self) -> float:
        return math.sqrt(self.alpha / 2.0)

    @property
    def delta_q(self) -> float:
        a, t = self.alpha, self.t0_over_m
        return math.sqrt((1.0 + (a * t) ** 2) / (2.0 * a))

    @property
    def mean_q(self) -> float:
        return self.beta * self.t0_over_m

    @property
    def mean_p(self) -> float:
        return self.beta

    @classmethod
    def with_uncertainty_product(cls, product: float, beta: float = 0.0) -> "GaussianPacketParams":
        """Packet with the given dq*dp and dq == dp, which keeps both grids compact."""
        if product < 0.5:
            raise ValueError("uncertainty product must be at least 1/2")
        c = math.sqrt(max(4.0 * product ** 2 - 1.0, 0.0))
        alpha = math.sqrt(1.0 + c * c)
        return cls(alpha=alpha, beta=beta, t0_over_m=c / alpha)


@dataclass(frozen=True)
class GeneralizedCoherentParams:
    n: int
    A: float = 0.0
    theta: float = 0.0
    omega: float = 1.0
    t0: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or not 0 <= self.n <= numerics.MAX_HERMITE_ORDER:
            raise HermiteRangeError(f"n must be an integer in [0, {numerics.MAX_HERMITE_ORDER}]")
        if self.A < 0:
            raise ValueError("A must be nonnegative")
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    @property
    def alpha_c(self) -> complex:
        return self.A * cmath.exp(-1j * (self.omega * self.t0 + self.theta))

    @property
    def q_bar(self) -> float:
        return self.alpha_c.real

    @property
    def p_bar(self) -> float:
        return self.alpha_c.imag

    @property
    def width(self) -> float:
        return math.sqrt(self.n + 0.5)


@dataclass(frozen=True)
class MomentReport:
    mean_q: float
    mean_p: float
    delta_q: float
    delta_p: float

    @property
    def uncertainty_product(self) -> float:
        return self.delta_q * self.delta_p


def auto_points(q_span: float, p_span: float, minimum: int = numerics.DEFAULT_POINTS) -> int:
    """Power-of-two point count keeping both direct Fourier sums alias-free."""
    need = 2.0 * q_span * p_span / math.pi
    n = max(minimum, 1 << math.ceil(math.log2(max(need, 2.0))))
    return n


def auto_grids(mean_q: float, width_q: float, mean_p: float, width_p: float,
               n_points: int | None = None, half_span: float | None = None):
    """Position and momentum grids spanning mean +- 8(width + 1) on each axis."""
    hq = half_span if half_span is not None else SPAN_SIGMAS * (width_q + 1.0)
    hp = half_span if half_span is not None else SPAN_SIGMAS * (width_p + 1.0)
    n = n_points or auto_points(2 * hq, 2 * hp)
    return numerics.centered_grid(mean_q, hq, n), numerics.centered_grid(mean_p, hp, n)


def _check_span(grid: GridSpec, mean: float, width: float, axis: str):
    lo, hi = mean - SPAN_SIGMAS * width, mean + SPAN_SIGMAS * width
    if not grid.contains(lo, hi):
        raise GridSpanError(
            f"{axis} grid [{grid.x_min}, {grid.x_max}] does not cover [{lo:.4g}, {hi:.4g}]"
        )


def _check_edges(amps: np.ndarray, what: str):
    if max(abs(amps[0]), abs(amps[-1])) >= EDGE_TOLERANCE:
        raise EdgeLeakageError(
            f"{what} amplitude at grid edge is {max(abs(amps[0]), abs(amps[-1])):.3g} "
            f">= {EDGE_TOLERANCE}"
        )


def build_gaussian_packet(params: GaussianPacketParams, grid: GridSpec | None = None,
                          momentum_grid: GridSpec | None = None) -> WaveFunction:
    """Spreading Gaussian packet, exact in momentum space; position by inverse transform."""
    if grid is None:
        spread = abs(params.beta) * params.t0_over_m
        grid, auto_p = auto_grids(params.mean_q, params.delta_q + spread,
                                  params.mean_p, params.delta_p)
        momentum_grid = momentum_grid or auto_p
    momentum_grid = momentum_grid or grid
    _check_span(grid, params.mean_q, params.delta_q, "position")
    _check_span(momentum_grid, params.mean_p, params.delta_p, "momentum")

    p = momentum_grid.points
    a, b, t = params.alpha, params.beta, params.t0_over_m
    amps = (math.pi * a) ** -0.25 * np.exp(-(p - b) ** 2 / (2 * a) - 1j * t * p ** 2 / 2)
    mom = WaveFunction(momentum_grid, amps, "momentum", grid)
    pos = mom.dual
    _check_edges(pos.amplitudes, "position")
    _check_edges(mom.amplitudes, "momentum")
    return pos


def build_generalized_coherent(params: GeneralizedCoherentParams, grid: GridSpec | None = None,
                               momentum_grid: GridSpec | None = None) -> WaveFunction:
    """Displaced n-th oscillator eigenstate with the time-dependent phase factor."""
    qb, pb, w = params.q_bar, params.p_bar, params.width
    if grid is None:
        grid, auto_p = auto_grids(qb, w, pb, w)
        momentum_grid = momentum_grid or auto_p
    momentum_grid = momentum_grid or grid
    _check_span(grid, qb, w, "position")
    _check_span(momentum_grid, pb, w, "momentum")

    q = grid.points
    # phase as printed: i pbar (q - pbar/2); only a constant differs from (q - qbar/2)
    phase = -params.omega * params.t0 * (params.n + 0.5) + pb * (q - pb / 2.0)
    amps = numerics.hermite_function(params.n, q - qb) * np.exp(1j * phase)
    wf = WaveFunction(grid, amps, "position", momentum_grid)
    _check_edges(wf.amplitudes, "position")
    _check_edges(wf.dual.amplitudes, "momentum")
    return wf


def build_custom(amplitudes, grid: GridSpec, representation: str = "position",
                 conjugate_grid: GridSpec | None = None) -> WaveFunction:
    amps = np.asarray(amplitudes, dtype=complex)
    numerics._check_length(amps, grid)
    norm = numerics.integrate(np.abs(amps) ** 2, grid)
    if not norm > 0 or not np.any(amps):
        raise ZeroStateError("state amplitudes are identically zero")
    amps = amps / math.sqrt(norm)
    _check_edges(amps, representation)
    return WaveFunction(grid, amps, representation, conjugate_grid or grid)


def hermite_superposition(coefficients, grid: GridSpec | None = None,
                          momentum_grid: GridSpec | None = None) -> WaveFunction:
    """Normalised sum_n c_n h_n(q), a convenient family of non-Gaussian test states."""
    coefficients = np.asarray(coefficients, dtype=complex)
    n_max = coefficients.size - 1
    if n_max > numerics.MAX_HERMITE_ORDER:
        raise HermiteRangeError(f"superposition order {n_max} exceeds supported maximum")
    if grid is None:
        w = math.sqrt(n_max + 0.5)
        grid, auto_p = auto_grids(0.0, w, 0.0, w)
        momentum_grid = momentum_grid or auto_p
    amps = coefficients @ numerics.hermite_functions(n_max, grid.points)
    wf = build_custom(amps, grid, "position", momentum_grid or grid)
    _check_edges(wf.dual.amplitudes, "momentum")
    return wf


def moments(wf: WaveFunction) -> MomentReport:
    pos, mom = wf.position(), wf.momentum()
    q, p = pos.points, mom.points
    rq, rp = pos.density, mom.density
    mq = numerics.integrate(q * rq, pos.grid)
    mp = numerics.integrate(p * rp, mom.grid)
    vq = numerics.integrate((q - mq) ** 2 * rq, pos.grid)
    vp = numerics.integrate((p - mp) ** 2 * rp, mom.grid)
    return MomentReport(mq, mp, math.sqrt(max(vq, 0.0)), math.sqrt(max(vp, 0.0)))


def build_state(spec: dict, n_points: int | None = None, half_span: float | None = None) -> WaveFunction:
    """Construct a state from a plain mapping (the CLI state schema).

    ``kind`` is one of ``gaussian``, ``coherent`` or ``custom``; ``custom``
    takes ``hermite_coefficients`` as a list of ``[re, im]`` pairs.
    """
    kind = spec["kind"]
    if kind == "gaussian":
        params = GaussianPacketParams(spec["alpha"], spec.get("beta", 0.0), spec.get("t0_over_m", 0.0))
        spread = abs(params.beta) * params.t0_over_m
        grids = auto_grids(params.mean_q, params.delta_q + spread, params.mean_p, params.delta_p,
                           n_points, half_span)
        return build_gaussian_packet(params, *grids)
    if kind == "coherent":
        params = GeneralizedCoherentParams(spec["n"], spec.get("A", 0.0), spec.get("theta", 0.0),
                                           spec.get("omega", 1.0), spec.get("t0", 0.0))
        grids = auto_grids(params.q_bar, params.width, params.p_bar, params.width, n_points, half_span)
        return build_generalized_coherent(params, *grids)
    if kind == "custom":
        coeffs = [complex(re, im) for re, im in spec["hermite_coefficients"]]
        w = math.sqrt(len(coeffs) - 0.5)
        grids = auto_grids(0.0, w, 0.0, w, n_points, half_span)
        return hermite_superposition(coeffs, *grids)
    raise ValueError(f"unknown state kind {kind!r}")
