import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from conjcorr import causal_densities as cd
from conjcorr.errors import InfeasibleCombinationError, OutOfSupportError
from conjcorr.quantum_correlations import global_correlation, local_curve
from conjcorr.states import (
    GaussianPacketParams,
    GeneralizedCoherentParams,
    build_gaussian_packet,
    build_generalized_coherent,
    moments,
)
from state_zoo import FOCKS, GAUSSIANS, NAMES


@pytest.fixture(scope="module")
def spreading():
    return build_gaussian_packet(GaussianPacketParams(1.0, 0.0, 1.0))


def test_equal_width_gaussian_is_identity_map():
    wf = build_gaussian_packet(GaussianPacketParams(1.0))
    assert cd.build_transport_curve(wf, 1)(0.5) == pytest.approx(0.5, abs=1e-10)
    assert cd.build_transport_curve(wf, -1)(0.5) == pytest.approx(-0.5, abs=1e-10)


def test_spreading_gaussian_curves(spreading):
    plus = cd.build_transport_curve(spreading, 1)
    assert cd.causal_conditional(plus, "given_q", 1.0) == pytest.approx(2 ** -0.5, abs=1e-10)
    assert cd.causal_conditional(plus, "given_p", 1.0) == pytest.approx(math.sqrt(2), abs=1e-10)
    assert cd.causal_global(plus) == pytest.approx(math.sqrt(2), abs=1e-8)
    assert cd.causal_global(cd.build_transport_curve(spreading, -1)) == pytest.approx(-math.sqrt(2), abs=1e-8)


@pytest.mark.parametrize("name", NAMES)
def test_median_maps_to_median(states, name):
    wf = states[name]
    curve = cd.build_transport_curve(wf, 1)
    q_med = curve.cdf_q.quantile(0.5)
    p_med = curve.cdf_p.quantile(0.5)
    assert float(curve(q_med)) == pytest.approx(float(p_med), abs=1e-8)


def test_quantile_matching_against_scipy_normal():
    # independent oracle: scipy's normal CDF / PPF for a moving chirped packet
    wf = build_gaussian_packet(GaussianPacketParams(2.0, 0.7, 0.6))
    m = moments(wf)
    curve = cd.build_transport_curve(wf, 1)
    q = m.mean_q + m.delta_q * np.array([-3.0, -0.4, 1.7])
    expected = stats.norm.ppf(stats.norm.cdf(q, m.mean_q, m.delta_q), m.mean_p, m.delta_p)
    assert np.max(np.abs(curve(q) - expected)) < 1e-9
    tail = m.mean_q + 5.5 * m.delta_q
    exp_tail = stats.norm.isf(stats.norm.sf(tail, m.mean_q, m.delta_q), m.mean_p, m.delta_p)
    assert float(curve(tail)) == pytest.approx(exp_tail, abs=1e-7)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_coherent_curves(n):
    wf = build_generalized_coherent(GeneralizedCoherentParams(n, 1.1, math.pi / 2))
    m = moments(wf)
    assert abs(m.mean_q) < 1e-10
    minus = cd.build_transport_curve(wf, -1)
    assert cd.causal_conditional(minus, "given_q", 0.7) == pytest.approx(m.mean_p - 0.7, abs=1e-8)
    assert cd.causal_global(cd.build_transport_curve(wf, 1)) == pytest.approx(2 * n + 1, abs=1e-8)
    assert cd.causal_global(minus) == pytest.approx(-(2 * n + 1), abs=1e-8)


@pytest.mark.parametrize("name", NAMES)
def test_monotone_curves(states, name):
    wf = states[name]
    plus, minus = cd.build_transport_curve(wf, 1), cd.build_transport_curve(wf, -1)
    # interior of the support: drop the outermost 1% of mass at each end
    q = plus.map.inputs
    u = plus.cdf_q.cdf(q)
    inner = (u > 0.01) & (u < 0.99)
    assert np.all(np.diff(plus(q[inner])) > 0)
    assert np.all(np.diff(minus(q[inner])) < 0)
    assert plus.map.is_strictly_monotone()


@pytest.mark.parametrize("name", GAUSSIANS + FOCKS)
def test_sign_structure(states, name):
    wf = states[name]
    gp = cd.causal_global(cd.build_transport_curve(wf, 1))
    gm = cd.causal_global(cd.build_transport_curve(wf, -1))
    assert abs(gp + gm) < 1e-6


@pytest.mark.parametrize("name", NAMES)
@pytest.mark.parametrize("eps", [1, -1])
def test_pushforward_reproduces_momentum_marginal(states, name, eps):
    curve = cd.build_transport_curve(states[name], eps)
    d = cd.pushforward_distance(curve)
    assert d["levy_steps"] < 2
    # change-of-variables density against |phi~(p)|^2 away from the tails
    mom = states[name].momentum()
    p = mom.points[mom.density > 1e-6 * mom.density.max()]
    p = p[(p > p.min() + 0.1) & (p < p.max() - 0.1)]
    rho = cd.pushforward_density(curve, p)
    assert np.max(np.abs(rho - np.abs(mom.evaluate(p)) ** 2)) < 1e-6


def test_fit_spreading_gaussian(spreading):
    combo = cd.fit_convex_combination(spreading)
    x = moments(spreading).uncertainty_product
    lam = 0.5 + 0.5 * math.sqrt(1 - (2 * x) ** -2)
    assert combo.lambda_plus == pytest.approx(lam, abs=1e-8)
    assert combo.lambda_plus == pytest.approx(0.8536, abs=5e-5)
    assert combo.lambda_minus == pytest.approx(1 - lam, abs=1e-8)
    assert abs(combo.global_correlation - global_correlation(spreading)) < 1e-8
    rep = cd.combo_correlations(combo, [1.0])
    assert rep.p_given_q[0] == pytest.approx(0.5, abs=1e-8)


def test_fit_minimum_uncertainty_is_even():
    combo = cd.fit_convex_combination(build_gaussian_packet(GaussianPacketParams(1.3, 0.4)))
    assert combo.lambda_plus == pytest.approx(0.5, abs=1e-8)


@pytest.mark.parametrize("name", FOCKS)
def test_fit_coherent_is_even_and_flat(states, name):
    wf = states[name]
    combo = cd.fit_convex_combination(wf)
    assert combo.lambda_plus == pytest.approx(0.5, abs=1e-8)
    rep = cd.combo_correlations(combo)
    assert np.max(np.abs(rep.p_given_q - moments(wf).mean_p)) < 1e-6


@pytest.mark.parametrize("name", GAUSSIANS + FOCKS)
def test_combo_local_curves_match_quantum(states, name):
    wf = states[name]
    rep = cd.combo_correlations(cd.fit_convex_combination(wf))
    cq = local_curve(wf, "given_q", rep.q_points)
    cp = local_curve(wf, "given_p", rep.p_points)
    assert np.max(np.abs(rep.p_given_q[cq.mask] - cq.values[cq.mask])) < 1e-5
    assert np.max(np.abs(rep.q_given_p[cp.mask] - cp.values[cp.mask])) < 1e-5


@given(st.floats(0.3, 3), st.floats(-1, 1), st.floats(0, 2))
def test_convexity_for_gaussians(alpha, beta, t):
    combo = cd.fit_convex_combination(build_gaussian_packet(GaussianPacketParams(alpha, beta, t)))
    assert 0 <= combo.lambda_plus <= 1
    assert abs(combo.global_correlation - combo.quantum_global) < 1e-8


def test_correlationless_reference(states):
    for name in NAMES:
        wf = states[name]
        rep = cd.correlationless_reference(wf)
        m = moments(wf)
        assert rep.global_correlation == 0.0
        assert np.all(rep.p_given_q == m.mean_p)
    wf = states["fock2"]
    rep = cd.correlationless_reference(wf)
    assert np.max(np.abs(local_curve(wf, "given_q", rep.q_points).values - rep.p_given_q)) < 1e-8


def test_out_of_support(spreading):
    curve = cd.build_transport_curve(spreading, 1)
    with pytest.raises(OutOfSupportError):
        cd.causal_conditional(curve, "given_q", 1e4)
    with pytest.raises(ValueError):
        cd.build_transport_curve(spreading, 0)


def test_infeasible_error_carries_values():
    err = InfeasibleCombinationError(3.0, 2.0, -2.0)
    assert (err.quantum_global, err.global_plus, err.global_minus) == (3.0, 2.0, -2.0)
    assert "3" in str(err)
