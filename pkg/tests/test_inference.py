import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eprcv.errors import DegenerateStateError
from eprcv.inference import (
    P_PAIR,
    P_PAIR_FLIPPED,
    X_PAIR,
    LinearEstimator,
    inference_variance_conditional,
    inference_variance_linear,
    linear_residual_variance,
    optimal_gain,
    optimal_offset,
    pair_moments,
)
from eprcv.quadrature import joint_distribution
from eprcv.states import (
    GaussianState,
    MixtureTerm,
    SeparableMixture,
    SingleModeGaussian,
    coherent_local,
    make_gaussian_tmsv,
    make_separable_random,
    product_gaussian,
)


def _brute_force_linear(state, pair, g, d):
    """Residual variance summed over the gridded joint (independent of the moment formulas)."""
    j = joint_distribution(state, *pair, n_points=512, n_sigmas=9)
    x, y = j.grid_a.centers, j.grid_b.centers
    resid = x[:, None] - g * y[None, :] - d
    return float((j.probs * resid**2).sum())


def test_tmsv_optimal_gain_and_variance(tmsv_gauss):
    assert optimal_gain(tmsv_gauss, X_PAIR) == pytest.approx(np.tanh(1.0))
    assert optimal_gain(tmsv_gauss, P_PAIR) == pytest.approx(-np.tanh(1.0))
    assert optimal_gain(tmsv_gauss, P_PAIR_FLIPPED) == pytest.approx(np.tanh(1.0))
    res = inference_variance_linear(tmsv_gauss, X_PAIR)
    assert res.variance == pytest.approx(1 / np.cosh(1.0))
    assert res.std == pytest.approx(np.cosh(1.0) ** -0.5)
    assert res.method == "linear" and res.estimator.d == 0.0


def test_unit_gain_tmsv_variance(tmsv_gauss):
    # Var(x_A - x_B) = 2 e^{-2r}
    assert linear_residual_variance(tmsv_gauss, X_PAIR, 1.0) == pytest.approx(2 * np.exp(-1.0))
    assert linear_residual_variance(tmsv_gauss, P_PAIR, -1.0) == pytest.approx(2 * np.exp(-1.0))


def test_offset_sign_makes_estimate_unbiased():
    state = product_gaussian(coherent_local(1.0 + 0.5j), coherent_local(-0.25))
    mx, my, *_ = pair_moments(state, X_PAIR)
    g = 0.7
    d = optimal_offset(state, X_PAIR, g)
    assert d == pytest.approx(mx - g * my)
    assert linear_residual_variance(state, X_PAIR, g, d) == pytest.approx(linear_residual_variance(state, X_PAIR, g))
    # any other offset adds its bias squared
    assert linear_residual_variance(state, X_PAIR, g, d + 0.3) == pytest.approx(
        linear_residual_variance(state, X_PAIR, g) + 0.09
    )


@pytest.mark.parametrize("g,d", [(0.5, 0.2), (-1.3, 0.0), (2.0, -1.0)])
def test_linear_variance_matches_brute_force(g, d):
    m = make_separable_random(3, 17, "gaussian")
    exact = linear_residual_variance(m, X_PAIR, g, d)
    assert exact == pytest.approx(_brute_force_linear(m, X_PAIR, g, d), rel=1e-4)


def test_supplied_estimator(tmsv_gauss):
    res = inference_variance_linear(tmsv_gauss, X_PAIR, LinearEstimator(1.0, 0.0))
    assert res.variance == pytest.approx(2 * np.exp(-1.0))
    assert res.estimator == LinearEstimator(1.0, 0.0)


def test_degenerate_partner_raises():
    # extreme squeezing of x_B drives its variance under the degeneracy threshold
    state = GaussianState(np.zeros(4), np.diag([1, 1, 1e-13, 1e13]))
    with pytest.raises(DegenerateStateError):
        optimal_gain(state, X_PAIR)


def test_conditional_tmsv_matches_closed_form(tmsv_gauss, tmsv_fock):
    for state in (tmsv_gauss, tmsv_fock):
        res = inference_variance_conditional(state, X_PAIR, refine=True)
        assert res.variance == pytest.approx(1 / np.cosh(1.0), abs=1e-6)
        assert res.method == "conditional"
        assert res.convergence_delta < 1e-6


def test_conditional_equals_linear_for_gaussian_states():
    cov = np.array([[3.0, 0.4, 1.2, -0.3], [0.4, 2.0, 0.2, -0.9], [1.2, 0.2, 2.5, 0.1], [-0.3, -0.9, 0.1, 1.8]])
    state = GaussianState([0.5, -1.0, 0.2, 0.0], cov)
    for pair in (X_PAIR, P_PAIR, (0.7, 2.1)):
        lin = inference_variance_linear(state, pair).variance
        cond = inference_variance_conditional(state, pair).variance
        assert cond == pytest.approx(lin, abs=1e-3)


def test_conditional_beats_linear_on_nonlinear_correlation():
    # classical mixture where x_A = |x_B|-like: linear regression captures nothing
    sm = lambda x: SingleModeGaussian([x, 0.0], np.eye(2))
    m = SeparableMixture(
        (MixtureTerm(0.25, sm(4.0), sm(-4.0)), MixtureTerm(0.25, sm(4.0), sm(4.0)), MixtureTerm(0.5, sm(-4.0), sm(0.0)))
    )
    lin = inference_variance_linear(m, X_PAIR).variance
    cond = inference_variance_conditional(m, X_PAIR).variance
    assert cond < 0.5 * lin


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000), st.sampled_from(["gaussian", "fock"]), st.sampled_from([X_PAIR, P_PAIR]))
def test_conditional_never_exceeds_linear(n_terms, seed, family, pair):
    m = make_separable_random(n_terms, seed, family)
    lin = inference_variance_linear(m, pair).variance
    cond = inference_variance_conditional(m, pair).variance
    assert cond <= lin + 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000), st.floats(-3, 3), st.floats(-3, 3))
def test_optimal_estimator_is_minimal(n_terms, seed, g, d):
    m = make_separable_random(n_terms, seed, "gaussian")
    best = inference_variance_linear(m, X_PAIR).variance
    g_star = optimal_gain(m, X_PAIR)
    mx, my, vx, vy, cxy = pair_moments(m, X_PAIR)
    assert g_star == pytest.approx(cxy / vy, rel=1e-12, abs=1e-12)
    assert linear_residual_variance(m, X_PAIR, g, d) >= best - 1e-12


def test_vacuum_inference_is_marginal(vacuum):
    assert inference_variance_linear(vacuum, X_PAIR).variance == pytest.approx(1.0)
    assert optimal_gain(vacuum, X_PAIR) == 0.0
