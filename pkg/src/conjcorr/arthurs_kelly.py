"""Arthurs-Kelly joint measurement of q and p with balance parameter b.

The outcome density of the pointer pair (x1, x2) is taken in closed form,

    P(x1, x2) = |<phi_{b,x1,x2} | phi>|^2 / (2 pi),
    phi_{b,x1,x2}(q) = (2 pi b^2)^(-1/4) exp(i q x2 - (x1 - q)^2 / (4 b^2)),

so no measurement dynamics is simulated. The x1 marginal is |phi(q)|^2
smeared by a Gaussian of standard deviation b and the x2 marginal is
|phi~(p)|^2 smeared by standard deviation 1/(2b); the conditional means
reduce to Gaussian averages of the probability current.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .errors import (
    CoverageError,
    GridTooCoarseError,
    InsufficientSamplesError,
    ScheduleDirectionError,
    UnsupportedPointError,
)
from .numerics import GridSpec
from .quantum_correlations import SUPPORT_THRESHOLD, _current, local_p_given_q, local_q_given_p
from .states import WaveFunction, moments

JOINT_POINTS = 257
AXES = ("given_x1", "given_x2")
SAMPLE_CHUNK = 1 << 16


@dataclass(frozen=True)
class ApparatusParams:
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.b) and self.b > 0):
            raise ValueError(f"b must be positive and finite, got {self.b}")

    @property
    def x1_kernel_width(self) -> float:
        return self.b

    @property
    def x2_kernel_width(self) -> float:
        return 0.5 / self.b


@dataclass(frozen=True, eq=False)
class JointDistributionGrid:
    x1_grid: GridSpec
    x2_grid: GridSpec
    values: np.ndarray  # indexed [x1, x2]
    b: float
    mass: float
    representation: str = "position"


def _as_app(app) -> ApparatusParams:
    return app if isinstance(app, ApparatusParams) else ApparatusParams(float(app))


def smeared_widths(wf: WaveFunction, app) -> tuple[float, float]:
    app = _as_app(app)
    m = moments(wf)
    return (math.sqrt(m.delta_q ** 2 + app.b ** 2),
            math.sqrt(m.delta_p ** 2 + app.x2_kernel_width ** 2))


def default_joint_grids(wf: WaveFunction, app, n_points: int = JOINT_POINTS):
    """x1/x2 grids spanning mean +- 8 smeared widths."""
    m = moments(wf)
    w1, w2 = smeared_widths(wf, app)
    return (numerics.centered_grid(m.mean_q, 8.0 * w1, n_points),
            numerics.centered_grid(m.mean_p, 8.0 * w2, n_points))


def joint_distribution(wf: WaveFunction, app, x1_grid: GridSpec | None = None,
                       x2_grid: GridSpec | None = None, n_points: int = JOINT_POINTS,
                       check: bool = True) -> JointDistributionGrid:
    """Tabulate P(x1, x2) by quadrature of the projector overlap.

    The overlap is evaluated in whichever representation resolves the
    Gaussian projector envelope with more grid points (position for large
    b, momentum for small b).
    """
    app = _as_app(app)
    b = app.b
    if x1_grid is None or x2_grid is None:
        g1, g2 = default_joint_grids(wf, app, n_points)
        x1_grid, x2_grid = x1_grid or g1, x2_grid or g2
    pos, mom = wf.position(), wf.momentum()
    x1, x2 = x1_grid.points, x2_grid.points
    res_q = math.sqrt(2.0) * b / pos.grid.step
    res_p = 1.0 / (math.sqrt(2.0) * b) / mom.grid.step
    if max(res_q, res_p) < 2.0:
        raise GridTooCoarseError(f"projector envelope for b={b} is unresolved on both state grids")

    if res_q >= res_p:
        q = pos.points
        wphi = numerics.simpson_weights(pos.grid) * pos.amplitudes
        env = np.exp(-((x1[:, None] - q[None, :]) ** 2) / (4.0 * b * b)) * wphi[None, :]
        osc = np.exp(-1j * np.outer(q, x2))
        overlap = (2.0 * math.pi * b * b) ** -0.25 * (env @ osc)
        rep = "position"
    else:
        p = mom.points
        wphi = numerics.simpson_weights(mom.grid) * mom.amplitudes
        env = np.exp(-(b * b) * (x2[:, None] - p[None, :]) ** 2) * wphi[None, :]
        osc = np.exp(1j * np.outer(p, x1))
        # a pure phase exp(-i x1 x2) is dropped: only |overlap| matters
        overlap = ((2.0 * b * b / math.pi) ** 0.25 * (env @ osc)).T
        rep = "momentum"
    values = np.abs(overlap) ** 2 / (2.0 * math.pi)
    mass = float(numerics.integrate_values(numerics.integrate_values(values, x2_grid, axis=1),
                                           x1_grid))
    if check and abs(mass - 1.0) > 1e-4:
        raise CoverageError(f"joint distribution mass {mass:.8f} deviates from 1 by more than 1e-4")
    return JointDistributionGrid(x1_grid, x2_grid, values, b, mass, rep)


def marginals(joint: JointDistributionGrid) -> tuple[np.ndarray, np.ndarray]:
    p1 = numerics.integrate_values(joint.values, joint.x2_grid, axis=1)
    p2 = numerics.integrate_values(joint.values, joint.x1_grid, axis=0)
    return p1, p2


def joint_moments(joint: JointDistributionGrid) -> dict:
    """Means, variances and the symmetrised covariance <2 x1 x2> - 2<x1><x2>."""
    x1, x2 = joint.x1_grid.points, joint.x2_grid.points
    p1, p2 = marginals(joint)
    mass = joint.mass
    m1 = numerics.integrate(x1 * p1, joint.x1_grid) / mass
    m2 = numerics.integrate(x2 * p2, joint.x2_grid) / mass
    v1 = numerics.integrate((x1 - m1) ** 2 * p1, joint.x1_grid) / mass
    v2 = numerics.integrate((x2 - m2) ** 2 * p2, joint.x2_grid) / mass
    row = numerics.integrate_values(joint.values * (x2 - m2)[None, :], joint.x2_grid, axis=1)
    cov = numerics.integrate((x1 - m1) * row, joint.x1_grid) / mass
    return {"mean_x1": m1, "mean_x2": m2, "var_x1": v1, "var_x2": v2, "global": 2.0 * cov}


def joint_conditional_means(joint: JointDistributionGrid, axis: str):
    """Direct 2D-quadrature conditional means on the joint's own grid.

    Returns (points, values, mask); values are NaN where the marginal is
    below threshold.
    """
    p1, p2 = marginals(joint)
    if axis == "given_x1":
        pts, marg = joint.x1_grid.points, p1
        num = numerics.integrate_values(joint.values * joint.x2_grid.points[None, :],
                                        joint.x2_grid, axis=1)
    elif axis == "given_x2":
        pts, marg = joint.x2_grid.points, p2
        num = numerics.integrate_values(joint.values * joint.x1_grid.points[:, None],
                                        joint.x1_grid, axis=0)
    else:
        raise ValueError(f"unknown axis {axis!r}")
    mask = marg >= SUPPORT_THRESHOLD * marg.max()
    vals = np.full(pts.shape, np.nan)
    vals[mask] = num[mask] / marg[mask]
    return pts, vals, mask


def _axis_setup(wf: WaveFunction, app: ApparatusParams, axis: str):
    if axis in ("given_x1", "q", "x1"):
        return wf.position(), app.x1_kernel_width
    if axis in ("given_x2", "p", "x2"):
        return wf.momentum(), app.x2_kernel_width
    raise ValueError(f"unknown axis {axis!r}")


def smeared_marginal(wf: WaveFunction, app, axis: str, points=None) -> np.ndarray:
    """P1 (axis 'q'/'given_x1') or P2 (axis 'p'/'given_x2') at the given points.

    One-dimensional Gaussian convolution of the quantum density, without
    building the joint grid.
    """
    app = _as_app(app)
    rep, sigma = _axis_setup(wf, app, axis)
    if points is None:
        g1, g2 = default_joint_grids(wf, app)
        points = (g1 if rep is wf.position() else g2).points
    return numerics.gaussian_smooth(rep.grid, rep.density, points, sigma,
                                    lambda x: np.abs(rep.evaluate(x)) ** 2)


def _smeared_current(rep: WaveFunction, points, sigma: float):
    _, num = _current(rep)

    def exact(x):
        return _current(rep, x.ravel())[1].reshape(x.shape)

    return numerics.gaussian_smooth(rep.grid, num, points, sigma, exact)


def _marginal_peak(rep: WaveFunction, sigma: float) -> float:
    # the smeared density peaks within the state's own grid
    pts = np.linspace(rep.grid.x_min, rep.grid.x_max, 513)
    dens = numerics.gaussian_smooth(rep.grid, rep.density, pts, sigma,
                                    lambda x: np.abs(rep.evaluate(x)) ** 2)
    return float(dens.max())


def conditional_mean(wf: WaveFunction, app, axis: str, value):
    """<x2>(x1) for axis 'given_x1', <x1>(x2) for 'given_x2'.

    Uses the reduced one-dimensional form: the smeared probability current
    divided by the smeared density.
    """
    app = _as_app(app)
    rep, sigma = _axis_setup(wf, app, axis)
    scalar = np.ndim(value) == 0
    pts = np.atleast_1d(np.asarray(value, dtype=float))
    dens = numerics.gaussian_smooth(rep.grid, rep.density, pts, sigma,
                                    lambda x: np.abs(rep.evaluate(x)) ** 2)
    if np.any(dens < SUPPORT_THRESHOLD * _marginal_peak(rep, sigma)):
        raise UnsupportedPointError("smeared marginal below threshold at requested point")
    out = _smeared_current(rep, pts, sigma) / dens
    return float(out[0]) if scalar else out


def global_moment(wf: WaveFunction, app, x1_grid: GridSpec | None = None,
                  x2_grid: GridSpec | None = None, n_points: int = JOINT_POINTS) -> float:
    """<2 x1 x2>_AK - 2<x1><x2> by two-dimensional quadrature of the joint."""
    return joint_moments(joint_distribution(wf, app, x1_grid, x2_grid, n_points))["global"]


def apparatus_dispersions(wf: WaveFunction, app, n_points: int = JOINT_POINTS) -> tuple[float, float]:
    mom = joint_moments(joint_distribution(wf, app, n_points=n_points))
    return math.sqrt(mom["var_x1"]), math.sqrt(mom["var_x2"])


@dataclass(frozen=True, eq=False)
class LimitTable:
    axis: str
    value: float
    b: np.ndarray
    conditional: np.ndarray
    exact: float
    deviation: np.ndarray
    richardson: np.ndarray  # NaN in the first row
    monotone: bool

    @property
    def ratios(self) -> np.ndarray:
        """Successive deviation ratios d_i / d_{i+1}."""
        d = np.abs(self.deviation)
        return d[:-1] / d[1:]


def limit_study(wf: WaveFunction, axis: str, value: float, b_schedule) -> LimitTable:
    """Conditional means along a b schedule heading to the exact limit.

    given_x1 needs a strictly decreasing schedule (b -> 0), given_x2 a
    strictly increasing one (b -> infinity). Richardson extrapolation assumes
    an error proportional to b^2 (resp. b^-2).
    """
    b = np.asarray(b_schedule, dtype=float)
    if b.size < 2 or np.any(b <= 0):
        raise ScheduleDirectionError("schedule needs at least two positive b values")
    steps = np.diff(b)
    if axis == "given_x1":
        if not np.all(steps < 0):
            raise ScheduleDirectionError("given_x1 limit needs b strictly decreasing toward 0")
        exact = local_p_given_q(wf, value)
        ratio = b[:-1] / b[1:]
    elif axis == "given_x2":
        if not np.all(steps > 0):
            raise ScheduleDirectionError("given_x2 limit needs b strictly increasing toward infinity")
        exact = local_q_given_p(wf, value)
        ratio = b[1:] / b[:-1]
    else:
        raise ValueError(f"unknown axis {axis!r}")
    cond = np.array([conditional_mean(wf, bi, axis, value) for bi in b])
    dev = cond - exact
    r2 = ratio ** 2
    rich = np.concatenate(([np.nan], (r2 * cond[1:] - cond[:-1]) / (r2 - 1.0)))
    ad = np.abs(dev)
    monotone = bool(np.all(np.diff(ad) <= 1e-12 * max(1.0, abs(exact))))
    return LimitTable(axis, float(value), b, cond, float(exact), dev, rich, monotone)


def sample_heterodyne(joint: JointDistributionGrid, n: int, seed: int) -> np.ndarray:
    """Draw n outcomes (x1, x2) from the tabulated joint.

    x1 is drawn from the marginal by inverse CDF over cells centred on the
    grid points, then x2 from the selected x1 row. Each block of
    ``SAMPLE_CHUNK`` draws uses its own child stream of ``seed``, so output
    does not depend on how the work is split.
    """
    if int(n) != n or n < 1:
        raise InsufficientSamplesError(f"need at least one sample, got {n}")
    n = int(n)
    g1, g2 = joint.x1_grid, joint.x2_grid
    vals = np.clip(joint.values, 0.0, None)
    row_mass = vals.sum(axis=1)
    cdf1 = np.concatenate(([0.0], np.cumsum(row_mass))) / row_mass.sum()
    rows = np.cumsum(vals, axis=1)
    rows = np.concatenate((np.zeros((rows.shape[0], 1)), rows), axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        rows = np.where(rows[:, -1:] > 0, rows / rows[:, -1:], 0.0)
    # global monotone table: row i occupies [i, i + 1]
    offset = np.arange(rows.shape[0])[:, None]
    flat = (rows + offset).ravel()
    n_cols = rows.shape[1]
    edges1 = g1.x_min - 0.5 * g1.step + g1.step * np.arange(g1.n_points + 1)
    edges2 = g2.x_min - 0.5 * g2.step + g2.step * np.arange(g2.n_points + 1)

    n_chunks = -(-n // SAMPLE_CHUNK)
    out = np.empty((n, 2))
    for c, rng in enumerate(numerics.substreams(seed, n_chunks)):
        lo = c * SAMPLE_CHUNK
        m = min(SAMPLE_CHUNK, n - lo)
        u = rng.random((m, 2))
        x1 = np.interp(u[:, 0], cdf1, edges1)
        i = np.clip(((x1 - edges1[0]) // g1.step).astype(int), 0, g1.n_points - 1)
        target = i + u[:, 1]
        j = np.searchsorted(flat, target, side="right") - 1
        j = np.clip(j - i * n_cols, 0, n_cols - 2)
        lo_c = rows[i, j]
        hi_c = rows[i, j + 1]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(hi_c > lo_c, (u[:, 1] - lo_c) / (hi_c - lo_c), 0.5)
        x2 = edges2[j] + np.clip(frac, 0.0, 1.0) * g2.step
        out[lo:lo + m, 0] = x1
        out[lo:lo + m, 1] = x2
    return out


@dataclass(frozen=True)
class BinSpec:
    n_bins: int = 40
    x1_range: tuple[float, float] | None = None
    x2_range: tuple[float, float] | None = None
    min_count: int = 10


@dataclass(frozen=True, eq=False)
class BinnedCurve:
    centers: np.ndarray
    means: np.ndarray  # NaN where flagged
    counts: np.ndarray
    std_errors: np.ndarray
    flagged: np.ndarray


@dataclass(frozen=True, eq=False)
class CorrelationEstimate:
    given_x1: BinnedCurve
    given_x2: BinnedCurve
    mean_x1: float
    mean_x1_se: float
    mean_x2: float
    mean_x2_se: float
    global_moment: float
    global_se: float
    n_samples: int
    seed: int | None = None
    extra: dict = field(default_factory=dict)


def _binned(x, y, rng_, n_bins, min_count) -> BinnedCurve:
    lo, hi = rng_
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.digitize(x, edges) - 1
    inside = (idx >= 0) & (idx < n_bins)
    idx, yy = idx[inside], y[inside]
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=yy, minlength=n_bins)
    sq = np.bincount(idx, weights=yy * yy, minlength=n_bins)
    flagged = counts < min_count
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = sums / counts
        var = (sq - counts * mean ** 2) / (counts - 1)
        se = np.sqrt(np.clip(var, 0.0, None) / counts)
    mean = np.where(flagged, np.nan, mean)
    se = np.where(flagged, np.nan, se)
    return BinnedCurve(0.5 * (edges[1:] + edges[:-1]), mean, counts, se, flagged)


def estimate_from_samples(samples, bins: BinSpec | None = None, seed: int | None = None) -> CorrelationEstimate:
    """Binned conditional means and the global moment with standard errors."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    if n < 100:
        raise InsufficientSamplesError(f"need at least 100 samples, got {n}")
    bins = bins or BinSpec()
    x1, x2 = samples[:, 0], samples[:, 1]
    m1, m2 = x1.mean(), x2.mean()
    s1, s2 = x1.std(ddof=1), x2.std(ddof=1)
    prod = (x1 - m1) * (x2 - m2)
    glob = 2.0 * prod.mean()
    glob_se = 2.0 * prod.std(ddof=1) / math.sqrt(n)
    r1 = bins.x1_range or (m1 - 3 * s1, m1 + 3 * s1)
    r2 = bins.x2_range or (m2 - 3 * s2, m2 + 3 * s2)
    return CorrelationEstimate(
        given_x1=_binned(x1, x2, r1, bins.n_bins, bins.min_count),
        given_x2=_binned(x2, x1, r2, bins.n_bins, bins.min_count),
        mean_x1=float(m1), mean_x1_se=float(s1 / math.sqrt(n)),
        mean_x2=float(m2), mean_x2_se=float(s2 / math.sqrt(n)),
        global_moment=float(glob), global_se=float(glob_se),
        n_samples=n, seed=seed,
    )
