"""Causal phase-space densities as monotone transport curves.

The causal density with orientation eps = +1 / -1 is concentrated on the
curve p = Pi_eps(q) obtained by matching the position CDF (eps = +1) or the
position survival function (eps = -1) to the momentum CDF:

    F_p(Pi_+(q)) = F_q(q),        F_p(Pi_-(q)) = 1 - F_q(q).

It is stored as that curve weighted by |phi(q)|^2 and never rasterised.
Both marginals are exact by construction, and conditional means are read
off the curve itself.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

from . import numerics
from .errors import DegenerateDensityError, InfeasibleCombinationError, OutOfSupportError
from .numerics import CDF, MonotoneMap
from .quantum_correlations import (
    SUPPORT_THRESHOLD,
    CorrelationReport,
    global_correlation,
    support_mask,
)
from .states import WaveFunction, moments

FEASIBILITY_SLACK = 1e-12


def density_cdf(wf: WaveFunction) -> CDF:
    """CDF of |amplitude|^2 in wf's own representation, with spectral slopes."""
    cache = wf.__dict__.setdefault("_cdf", {})
    if "cdf" not in cache:
        f, f1, f3 = wf.density_derivatives()
        if not numerics.integrate(f, wf.grid) > 0:
            raise DegenerateDensityError("marginal has zero total mass")
        cache["cdf"] = CDF(wf.grid, f, f1, f3)
    return cache["cdf"]


def _match(src: CDF, dst: CDF, x, flip: bool):
    """Solve dst(y) = src(x) (or = 1 - src(x) when flip), using whichever tail is accurate."""
    lo, up = src.cdf(x), src.sf(x)
    if flip:
        lo, up = up, lo
    # lo is the target lower-tail mass, up = 1 - lo computed independently
    use_lower = lo <= 0.5
    out = np.empty(np.shape(lo))
    if np.any(use_lower):
        out[use_lower] = dst.quantile(lo[use_lower])
    if np.any(~use_lower):
        out[~use_lower] = dst.quantile(up[~use_lower], upper=True)
    return out


@dataclass(frozen=True, eq=False)
class TransportCurve:
    epsilon: int
    wavefunction: WaveFunction

    def __post_init__(self):
        if self.epsilon not in (1, -1):
            raise ValueError(f"epsilon must be +1 or -1, got {self.epsilon}")

    @property
    def cdf_q(self) -> CDF:
        return density_cdf(self.wavefunction.position())

    @property
    def cdf_p(self) -> CDF:
        return density_cdf(self.wavefunction.momentum())

    @property
    def source_density(self) -> np.ndarray:
        return self.wavefunction.position().density

    def __call__(self, q):
        """Pi_eps(q)."""
        q = np.asarray(q, dtype=float)
        return _match(self.cdf_q, self.cdf_p, np.atleast_1d(q), self.epsilon < 0).reshape(q.shape)

    def inverse(self, p):
        """Pi_eps^{-1}(p)."""
        p = np.asarray(p, dtype=float)
        return _match(self.cdf_p, self.cdf_q, np.atleast_1d(p), self.epsilon < 0).reshape(p.shape)

    @functools.cached_property
    def map(self) -> MonotoneMap:
        """The curve sampled on the supported position grid points."""
        pos = self.wavefunction.position()
        q = pos.points[support_mask(pos)]
        orient = "increasing" if self.epsilon > 0 else "decreasing"
        return MonotoneMap(q, self(q), orient, self.__call__)


def build_transport_curve(wf: WaveFunction, epsilon: int) -> TransportCurve:
    curve = TransportCurve(int(epsilon), wf)
    curve.cdf_q, curve.cdf_p  # build (and validate) both CDFs eagerly
    return curve


def _check_support(wf: WaveFunction, x, what: str):
    x = np.atleast_1d(x)
    if np.any((x < wf.grid.x_min) | (x > wf.grid.x_max)) or not np.all(support_mask(wf, x)):
        raise OutOfSupportError(f"{what} value outside the support of its marginal")


def causal_conditional(curve: TransportCurve, axis: str, value):
    """<p>(q) = Pi(q) on axis 'given_q'; <q>(p) = Pi^{-1}(p) on 'given_p'."""
    if axis == "given_q":
        _check_support(curve.wavefunction.position(), value, "q")
        return curve(value)
    if axis == "given_p":
        _check_support(curve.wavefunction.momentum(), value, "p")
        return curve.inverse(value)
    raise ValueError(f"unknown axis {axis!r}")


def causal_global(curve: TransportCurve) -> float:
    """2 * integral q Pi(q) |phi(q)|^2 dq - 2<q><p>."""
    cache = curve.__dict__
    if "_global" not in cache:
        pos = curve.wavefunction.position()
        q = pos.points
        m = moments(curve.wavefunction)
        weight = curve.cdf_q.density
        live = weight > 0
        pi = np.zeros_like(q)
        pi[live] = curve(q[live])
        cache["_global"] = 2.0 * numerics.integrate(q * pi * weight, pos.grid) - 2.0 * m.mean_q * m.mean_p
    return cache["_global"]


def _default_points(wf: WaveFunction, max_points: int = 129):
    pts = wf.points[support_mask(wf)]
    if pts.size > max_points:
        pts = pts[np.linspace(0, pts.size - 1, max_points).round().astype(int)]
    return pts


def correlationless_reference(wf: WaveFunction, q_points=None, p_points=None) -> CorrelationReport:
    """The product density |phi(q)|^2 |phi~(p)|^2: flat conditional means, zero correlation."""
    m = moments(wf)
    q = _default_points(wf.position()) if q_points is None else np.asarray(q_points, float)
    p = _default_points(wf.momentum()) if p_points is None else np.asarray(p_points, float)
    return CorrelationReport("correlationless", q, np.full(q.shape, m.mean_p),
                             p, np.full(p.shape, m.mean_q), 0.0, m.mean_q, m.mean_p)


def curve_report(curve: TransportCurve, q_points=None, p_points=None) -> CorrelationReport:
    wf = curve.wavefunction
    m = moments(wf)
    q = _default_points(wf.position()) if q_points is None else np.asarray(q_points, float)
    p = _default_points(wf.momentum()) if p_points is None else np.asarray(p_points, float)
    label = "causal_plus" if curve.epsilon > 0 else "causal_minus"
    return CorrelationReport(label, q, causal_conditional(curve, "given_q", q),
                             p, causal_conditional(curve, "given_p", p),
                             causal_global(curve), m.mean_q, m.mean_p)


@dataclass(frozen=True, eq=False)
class CausalCombo:
    curve_plus: TransportCurve
    curve_minus: TransportCurve
    lambda_plus: float
    lambda_minus: float
    quantum_global: float
    global_plus: float
    global_minus: float

    @property
    def wavefunction(self) -> WaveFunction:
        return self.curve_plus.wavefunction

    @property
    def global_correlation(self) -> float:
        return self.lambda_plus * self.global_plus + self.lambda_minus * self.global_minus


def combine(wf: WaveFunction, lambda_plus: float) -> CausalCombo:
    """Convex combination with prescribed weights (no fitting)."""
    if not 0.0 <= lambda_plus <= 1.0:
        raise ValueError("lambda_plus must lie in [0, 1]")
    cp, cm = build_transport_curve(wf, 1), build_transport_curve(wf, -1)
    return CausalCombo(cp, cm, float(lambda_plus), 1.0 - float(lambda_plus),
                       global_correlation(wf), causal_global(cp), causal_global(cm))


def fit_convex_combination(wf: WaveFunction) -> CausalCombo:
    """Weights lambda_+ + lambda_- = 1 reproducing the quantum global correlation.

    Solves lambda_+ g_+ + lambda_- g_- = g for the causal globals g_+ >= g_-.
    Raises :class:`InfeasibleCombinationError` when g lies outside
    [g_-, g_+]; the weights are never clamped.
    """
    cp, cm = build_transport_curve(wf, 1), build_transport_curve(wf, -1)
    g, gp, gm = global_correlation(wf), causal_global(cp), causal_global(cm)
    span = gp - gm
    if abs(span) <= FEASIBILITY_SLACK:
        if abs(g - gp) > FEASIBILITY_SLACK:
            raise InfeasibleCombinationError(g, gp, gm)
        lam = 0.5
    else:
        lam = (g - gm) / span
        if lam < -FEASIBILITY_SLACK or lam > 1.0 + FEASIBILITY_SLACK:
            raise InfeasibleCombinationError(g, gp, gm)
        lam = min(max(lam, 0.0), 1.0)
    return CausalCombo(cp, cm, lam, 1.0 - lam, g, gp, gm)


def combo_correlations(combo: CausalCombo, q_points=None, p_points=None) -> CorrelationReport:
    wf = combo.wavefunction
    m = moments(wf)
    q = _default_points(wf.position()) if q_points is None else np.asarray(q_points, float)
    p = _default_points(wf.momentum()) if p_points is None else np.asarray(p_points, float)
    lp, lm = combo.lambda_plus, combo.lambda_minus
    pq = lp * causal_conditional(combo.curve_plus, "given_q", q) + \
        lm * causal_conditional(combo.curve_minus, "given_q", q)
    qp = lp * causal_conditional(combo.curve_plus, "given_p", p) + \
        lm * causal_conditional(combo.curve_minus, "given_p", p)
    return CorrelationReport("causal_combo", q, pq, p, qp, combo.global_correlation,
                             m.mean_q, m.mean_p,
                             {"lambda_plus": lp, "lambda_minus": lm})


def pushforward_density(combo_or_curve, p, step: float = 3e-5) -> np.ndarray:
    """Momentum marginal of a causal density, by change of variables along its curve(s).

    rho(p) = sum_eps lambda_eps |phi(Pi_eps^{-1}(p))|^2 |d Pi_eps^{-1} / dp|,
    with the derivative taken by a five-point finite difference of the curve.
    """
    if isinstance(combo_or_curve, TransportCurve):
        parts = [(1.0, combo_or_curve)]
    else:
        parts = [(combo_or_curve.lambda_plus, combo_or_curve.curve_plus),
                 (combo_or_curve.lambda_minus, combo_or_curve.curve_minus)]
    p = np.asarray(p, dtype=float)
    first = parts[0][1]
    pos = first.wavefunction.position()
    cdf_p = first.cdf_p
    # beyond the numerically resolved CDF the pushed mass is zero
    live = (cdf_p.cdf(p) > 1e-15) & (cdf_p.sf(p) > 1e-15)
    live &= (p - 2 * step >= cdf_p.grid.x_min) & (p + 2 * step <= cdf_p.grid.x_max)
    out = np.zeros(p.shape)
    pl = p[live]
    for lam, curve in parts:
        if lam == 0.0:
            continue
        inv = curve.inverse(pl)
        deriv = (-curve.inverse(pl + 2 * step) + 8 * curve.inverse(pl + step)
                 - 8 * curve.inverse(pl - step) + curve.inverse(pl - 2 * step)) / (12 * step)
        out[live] += lam * np.abs(pos.evaluate(inv)) ** 2 * np.abs(deriv)
    return out


def pushforward_distance(curve: TransportCurve) -> dict:
    """Distance between the pushed-forward position marginal and |phi~(p)|^2.

    At each momentum grid point the pushforward CDF is
    G(p) = F_q(Pi^{-1}(p)) (or 1 - F_q(...) for eps = -1). F_q and the
    target F_p are built independently of the quantile solver, from
    cumulative Simpson integrals of |phi(q)|^2 and |phi~(p)|^2 (F_q is
    evaluated off-grid by cubic Hermite interpolation with the density as
    slope). Returns the vertical sup-CDF distance and the Levy distance in
    momentum grid steps: the smallest integer shift s with
    F_p(p - s h) <= G(p) <= F_p(p + s h) at every momentum grid point.
    """
    pos, mom = curve.wavefunction.position(), curve.wavefunction.momentum()
    f_q = cumulative_simpson(pos.density, dx=pos.grid.step, initial=0.0)
    f_p = cumulative_simpson(mom.density, dx=mom.grid.step, initial=0.0)
    cdf_q = CubicHermiteSpline(pos.points, f_q / f_q[-1], pos.density / f_q[-1])
    target = f_p / f_p[-1]
    pp = mom.points
    below = np.clip(cdf_q(curve.inverse(pp)), 0.0, 1.0)
    pushed = below if curve.epsilon > 0 else 1.0 - below
    sup = float(np.max(np.abs(pushed - target)))
    slack = 1e-9
    s = 0
    while s < pp.size:
        lo = np.concatenate((np.zeros(s), target[:pp.size - s])) if s else target
        hi = np.concatenate((target[s:], np.ones(s))) if s else target
        if np.all(lo - slack <= pushed) and np.all(pushed <= hi + slack):
            break
        s += 1
    return {"sup_cdf": sup, "levy_steps": s}
