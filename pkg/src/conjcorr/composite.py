"""Two-mode product constructions in collective coordinates.

Both constructions factor into two independent one-mode problems, each
with its own canonical pair:

* EPR-type Gaussian state: factor ``a`` is phi_1 in u = q1 - q2 with
  conjugate momentum (p1 - p2)/2; factor ``b`` is phi~_2 in v = p1 + p2 with
  conjugate position (q1 + q2)/2.
* Entangled generalized coherent state: factor ``a`` is phi_{m,alpha} in
  (q1 + q2)/sqrt2 with momentum (p1 + p2)/sqrt2; factor ``b`` is
  phi_{n,beta} in (q1 - q2)/sqrt2 with momentum (p1 - p2)/sqrt2.

The phase-space density is a product of one causal combination per factor.
Only pairs taking one coordinate from each factor commute and have a
claimed joint density; anything else raises :class:`UnsupportedPairError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .causal_densities import CausalCombo, combine, fit_convex_combination, pushforward_density
from .errors import UnsupportedPairError
from .states import (
    GeneralizedCoherentParams,
    WaveFunction,
    auto_grids,
    build_custom,
    build_generalized_coherent,
)

_R2 = math.sqrt(2.0)


@dataclass(frozen=True)
class EPRParams:
    alpha1: float
    alpha2: float
    q0: float = 0.0
    P0: float = 0.0

    def __post_init__(self):
        if not (self.alpha1 > 0 and self.alpha2 > 0):
            raise ValueError("alpha1 and alpha2 must be positive")


@dataclass(frozen=True)
class Coordinate:
    """A collective coordinate: ``scale`` times the position or momentum of a factor."""

    name: str
    factor: str  # "a" or "b"
    axis: str  # "q" or "p"
    scale: float
    # coefficients on (q1, q2, p1, p2)
    coefficients: tuple[float, float, float, float]


@dataclass(frozen=True, eq=False)
class TwoModeProductDensity:
    kind: str
    coordinates: dict  # name -> Coordinate
    factor_a: CausalCombo
    factor_b: CausalCombo
    supported_pairs: tuple

    def coefficient_matrix(self) -> np.ndarray:
        """Rows: (Q_a, P_a, Q_b, P_b) in terms of (q1, q2, p1, p2)."""
        rows = []
        for factor in ("a", "b"):
            for axis in ("q", "p"):
                c = next(c for c in self.coordinates.values()
                         if c.factor == factor and c.axis == axis and c.scale == 1.0)
                rows.append(c.coefficients)
        return np.array(rows, dtype=float)

    def factor(self, name: str) -> CausalCombo:
        return self.factor_a if name == "a" else self.factor_b


def build_epr_state(params: EPRParams, grids=None) -> tuple[WaveFunction, WaveFunction]:
    """(phi_1 in u = q1 - q2, phi~_2 in v = p1 + p2).

    phi_1 is exact in position representation and phi~_2 exact in momentum
    representation; both are minimum-uncertainty Gaussians.
    """
    d1, d2 = math.sqrt(params.alpha1 / 2.0), math.sqrt(params.alpha2 / 2.0)
    w1, w2 = 1.0 / (2.0 * d1), 1.0 / (2.0 * d2)  # conjugate widths
    if grids is None:
        g1 = auto_grids(params.q0, d1, 0.0, w1)
        g2 = auto_grids(0.0, w2, params.P0, d2)
    else:
        g1, g2 = grids
    u = g1[0].points
    amp1 = (math.pi * params.alpha1) ** -0.25 * np.exp(-(u - params.q0) ** 2 / (2 * params.alpha1))
    phi1 = build_custom(amp1, g1[0], "position", g1[1])
    v = g2[1].points
    amp2 = (math.pi * params.alpha2) ** -0.25 * np.exp(-(v - params.P0) ** 2 / (2 * params.alpha2))
    phi2 = build_custom(amp2, g2[1], "momentum", g2[0])
    return phi1, phi2


def _epr_coordinates():
    return {
        "q1-q2": Coordinate("q1-q2", "a", "q", 1.0, (1, -1, 0, 0)),
        "(p1-p2)/2": Coordinate("(p1-p2)/2", "a", "p", 1.0, (0, 0, 0.5, -0.5)),
        "p1-p2": Coordinate("p1-p2", "a", "p", 2.0, (0, 0, 1, -1)),
        "(q1+q2)/2": Coordinate("(q1+q2)/2", "b", "q", 1.0, (0.5, 0.5, 0, 0)),
        "p1+p2": Coordinate("p1+p2", "b", "p", 1.0, (0, 0, 1, 1)),
    }


EPR_PAIRS = (
    ("q1-q2", "(q1+q2)/2"),
    ("q1-q2", "p1+p2"),
    ("(q1+q2)/2", "p1-p2"),
    ("p1+p2", "(p1-p2)/2"),
)


def build_epr_density(params: EPRParams, grids=None) -> TwoModeProductDensity:
    phi1, phi2 = build_epr_state(params, grids)
    return TwoModeProductDensity("epr", _epr_coordinates(), fit_convex_combination(phi1),
                                 fit_convex_combination(phi2), EPR_PAIRS)


def _coherent_coordinates():
    s = 1.0 / _R2
    return {
        "(q1+q2)/sqrt2": Coordinate("(q1+q2)/sqrt2", "a", "q", 1.0, (s, s, 0, 0)),
        "(p1+p2)/sqrt2": Coordinate("(p1+p2)/sqrt2", "a", "p", 1.0, (0, 0, s, s)),
        "(q1-q2)/sqrt2": Coordinate("(q1-q2)/sqrt2", "b", "q", 1.0, (s, -s, 0, 0)),
        "(p1-p2)/sqrt2": Coordinate("(p1-p2)/sqrt2", "b", "p", 1.0, (0, 0, s, -s)),
    }


COHERENT_PAIRS = (
    ("(q1+q2)/sqrt2", "(q1-q2)/sqrt2"),
    ("(q1+q2)/sqrt2", "(p1-p2)/sqrt2"),
    ("(p1+p2)/sqrt2", "(q1-q2)/sqrt2"),
    ("(p1+p2)/sqrt2", "(p1-p2)/sqrt2"),
)


def _coherent_params(n: int, amp: complex, omega: float, t0: float) -> GeneralizedCoherentParams:
    # amp plays the role of A exp(-i(omega t0 + theta)) at time t0
    A = abs(amp)
    theta = -math.atan2(amp.imag, amp.real) - omega * t0 if A > 0 else 0.0
    return GeneralizedCoherentParams(n, A, theta, omega, t0)


def build_entangled_coherent_density(m: int, n: int, alpha: complex, beta: complex,
                                     omega: float = 1.0, t0: float = 0.0) -> TwoModeProductDensity:
    """Arithmetic means of the two causal densities in each collective mode."""
    fa = build_generalized_coherent(_coherent_params(m, complex(alpha), omega, t0))
    fb = build_generalized_coherent(_coherent_params(n, complex(beta), omega, t0))
    return TwoModeProductDensity("entangled-coherent", _coherent_coordinates(),
                                 combine(fa, 0.5), combine(fb, 0.5), COHERENT_PAIRS)


@dataclass(frozen=True, eq=False)
class PairMarginal:
    pair: tuple[str, str]
    x_points: np.ndarray
    y_points: np.ndarray
    values: np.ndarray  # causal product density, [x, y]
    quantum: np.ndarray  # quantum prediction from the factor wavefunctions
    mass: float
    residual: float
    meta: dict = field(default_factory=dict)


def _causal_axis_marginal(combo: CausalCombo, coord: Coordinate):
    wf = combo.wavefunction
    if coord.axis == "q":
        # the density sits on curves weighted by |phi(q)|^2
        pos = wf.position()
        base, dens = pos.points, pos.density
    else:
        mom = wf.momentum()
        base = mom.points
        dens = pushforward_density(combo, base)
    return coord.scale * base, dens / coord.scale


def _quantum_axis_marginal(combo: CausalCombo, coord: Coordinate, points):
    """Independent oracle: |amplitude|^2 via a fresh quadrature transform when needed."""
    wf = combo.wavefunction
    base = np.asarray(points) / coord.scale
    rep = wf.position() if coord.axis == "q" else wf.momentum()
    if rep is wf and np.array_equal(base, wf.points):
        dens = np.abs(wf.amplitudes) ** 2
    elif rep is wf:
        dens = np.abs(wf.evaluate(base)) ** 2
    else:
        sign = -1 if wf.representation == "position" else 1
        dens = np.abs(numerics.fourier_sum(wf.amplitudes, wf.grid, base, sign)) ** 2
    return dens / coord.scale


def _grid_of(points) -> numerics.GridSpec:
    return numerics.GridSpec(float(points[0]), float(points[-1]), points.size)


def pair_marginal(density: TwoModeProductDensity, pair) -> PairMarginal:
    pair = tuple(pair)
    if pair not in density.supported_pairs and pair[::-1] not in density.supported_pairs:
        raise UnsupportedPairError(
            f"no joint density is claimed for {pair}; supported pairs: {density.supported_pairs}"
        )
    cx, cy = (density.coordinates[name] for name in pair)
    x, mx = _causal_axis_marginal(density.factor(cx.factor), cx)
    y, my = _causal_axis_marginal(density.factor(cy.factor), cy)
    qx = _quantum_axis_marginal(density.factor(cx.factor), cx, x)
    qy = _quantum_axis_marginal(density.factor(cy.factor), cy, y)
    values = np.outer(mx, my)
    quantum = np.outer(qx, qy)
    gx, gy = _grid_of(x), _grid_of(y)
    mass = float(numerics.integrate_values(numerics.integrate_values(values, gy, axis=1), gx))
    residual = float(np.max(np.abs(values - quantum)))
    return PairMarginal(pair, x, y, values, quantum, mass, residual)


def verify(density: TwoModeProductDensity) -> dict:
    """Residuals and masses of every supported pair marginal."""
    out = {}
    for pair in density.supported_pairs:
        pm = pair_marginal(density, pair)
        out[f"{pair[0]} | {pair[1]}"] = {"residual": pm.residual, "mass": pm.mass}
    return out


def poisson_bracket(row_a, row_b) -> float:
    """{A, B} for linear functions with coefficients on (q1, q2, p1, p2)."""
    a, b = np.asarray(row_a, float), np.asarray(row_b, float)
    return float(a[:2] @ b[2:] - a[2:] @ b[:2])
