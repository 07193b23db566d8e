"""Exact quantum local and global correlations of q and p for pure states.

The local correlation at fixed q is the symmetrised projector expectation,
which for a pure state reduces to the probability current over the density:

    <p>(q) = Re(phi*(q) (-i) phi'(q)) / |phi(q)|^2

and mirrored in momentum space with +i d/dp. Derivatives are spectral.
Points where the density is below ``SUPPORT_THRESHOLD`` times its maximum
are masked: the ratio is 0/0 at nodes and is not defined there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import UnsupportedPointError
from .states import WaveFunction, moments

SUPPORT_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class LocalCorrelationCurve:
    axis: str  # "given_q" or "given_p"
    points: np.ndarray
    values: np.ndarray  # NaN outside the mask
    mask: np.ndarray


@dataclass(frozen=True, eq=False)
class CorrelationReport:
    """Local curves and global correlation of one phase-space description."""

    label: str
    q_points: np.ndarray
    p_given_q: np.ndarray
    p_points: np.ndarray
    q_given_p: np.ndarray
    global_correlation: float
    mean_q: float
    mean_p: float
    extra: dict = field(default_factory=dict)


def _current(wf: WaveFunction, x=None):
    """Return (density, conditional-mean numerator) of wf's own representation.

    Position: Re(phi* (-i) phi') = Im(phi* phi').
    Momentum: Re(phi~* (+i) phi~') = -Im(phi~* phi~').
    """
    sign = 1.0 if wf.representation == "position" else -1.0
    if x is None:
        a, a1 = wf.amplitudes, wf.derivative(1)
    else:
        a, a1 = wf.evaluate(x, 0), wf.evaluate(x, 1)
    return np.abs(a) ** 2, sign * np.imag(np.conj(a) * a1)


def support_mask(wf: WaveFunction, x=None, threshold: float = SUPPORT_THRESHOLD) -> np.ndarray:
    peak = wf.density.max()
    dens = wf.density if x is None else np.abs(wf.evaluate(x)) ** 2
    return dens >= threshold * peak


def _conditional(wf: WaveFunction, x):
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    outside = (x < wf.grid.x_min) | (x > wf.grid.x_max)
    dens, num = _current(wf, x)
    ok = (dens >= SUPPORT_THRESHOLD * wf.density.max()) & ~outside
    if not np.all(ok):
        bad = x[~ok][0]
        raise UnsupportedPointError(
            f"marginal density at {bad:.6g} is below {SUPPORT_THRESHOLD:g} x its maximum"
        )
    out = num / dens
    return float(out[0]) if scalar else out


def local_p_given_q(wf: WaveFunction, q):
    """Conditional mean momentum at position q (scalar or array)."""
    return _conditional(wf.position(), q)


def local_q_given_p(wf: WaveFunction, p):
    """Conditional mean position at momentum p (scalar or array)."""
    return _conditional(wf.momentum(), p)


def local_curve(wf: WaveFunction, axis: str, points=None,
                threshold: float = SUPPORT_THRESHOLD) -> LocalCorrelationCurve:
    """Conditional-mean curve on grid points (default) or given points, masked.

    ``threshold`` is relative to the peak density; 0 keeps every point with
    nonzero density.
    """
    rep = {"given_q": wf.position, "given_p": wf.momentum}[axis]()
    if points is None:
        points = rep.points
        dens, num = _current(rep)
    else:
        points = np.asarray(points, dtype=float)
        dens, num = _current(rep, points)
    mask = (dens >= threshold * rep.density.max()) & (dens > 0)
    values = np.full(points.shape, np.nan)
    values[mask] = num[mask] / dens[mask]
    return LocalCorrelationCurve(axis, points, values, mask)


def global_correlation(wf: WaveFunction) -> float:
    """<qp + pq> - 2<q><p> via 2 * integral q Re(phi* (-i) phi') dq."""
    pos = wf.position()
    _, num = _current(pos)
    m = moments(wf)
    sym = 2.0 * numerics.integrate(pos.points * num, pos.grid)
    return sym - 2.0 * m.mean_q * m.mean_p


def quantum_report(wf: WaveFunction, q_points=None, p_points=None) -> CorrelationReport:
    m = moments(wf)
    cq = local_curve(wf, "given_q", q_points)
    cp = local_curve(wf, "given_p", p_points)
    return CorrelationReport("quantum", cq.points, cq.values, cp.points, cp.values,
                             global_correlation(wf), m.mean_q, m.mean_p)
