import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import eval_hermite, factorial

from eprcv.errors import GridError
from eprcv.inference import P_PAIR, X_PAIR
from eprcv.quadrature import (
    QuadratureGrid,
    auto_grid,
    conditional_profile,
    hermite_functions,
    joint_distribution,
    local_density,
    marginal_moments,
    total_variation,
)
from eprcv.states import (
    GaussianState,
    MixtureTerm,
    SeparableMixture,
    SingleModeFock,
    SingleModeGaussian,
    coherent_local,
    gaussian_to_fock,
    make_gaussian_tmsv,
    make_separable_random,
    make_two_mode_squeezed_vacuum,
    mixture_to_density,
    product_gaussian,
    squeezed_thermal_local,
    tmsv_cutoff,
)


def _law_of_total_variance_gap(joint):
    prof = conditional_profile(joint)
    _, _, vx, _, _ = joint.moments()
    mu_bar = prof.weights @ prof.means
    between = prof.weights @ (prof.means - mu_bar) ** 2
    return abs(vx - (prof.average_variance + between))


# --- grid and Hermite functions --------------------------------------------


def test_grid_geometry():
    g = QuadratureGrid.symmetric(4.0, 16)
    assert g.width == 0.5
    assert g.centers[0] == -3.75 and g.centers[-1] == 3.75
    assert len(g.edges) == 17 and g.refined().n_points == 32
    with pytest.raises(ValueError):
        QuadratureGrid(0, 1, 8)
    with pytest.raises(ValueError):
        QuadratureGrid(1, 1, 32)


def test_hermite_functions_match_explicit_formula():
    x = np.linspace(-5, 5, 41)
    psi = hermite_functions(12, x)
    for n in range(12):
        ref = (2 * np.pi) ** -0.25 / np.sqrt(2.0**n * factorial(n)) * eval_hermite(n, x / np.sqrt(2)) * np.exp(-(x**2) / 4)
        assert np.allclose(psi[n], ref, atol=1e-12)


def test_hermite_functions_orthonormal_at_high_order():
    x = np.linspace(-25, 25, 8001)
    psi = hermite_functions(60, x)
    assert np.all(np.isfinite(psi))
    gram = psi @ psi.T * (x[1] - x[0])
    assert np.allclose(gram, np.eye(60), atol=1e-9)


# --- marginal moments ---------------------------------------------------------


def test_marginal_moments_examples(vacuum, tmsv_gauss):
    assert marginal_moments(vacuum, "A", 0.0) == pytest.approx((0.0, 1.0))
    assert marginal_moments(tmsv_gauss, "A", 0.0) == pytest.approx((0.0, np.cosh(1.0)))
    coh = product_gaussian(coherent_local(0.8), coherent_local(0))
    assert marginal_moments(coh, "A", 0.0) == pytest.approx((1.6, 1.0))
    # x_{pi/2} is p
    assert marginal_moments(coh, "A", np.pi / 2) == pytest.approx((0.0, 1.0), abs=1e-12)


def test_local_density_of_fock_state_matches_gaussian():
    local = squeezed_thermal_local(0.1, 0.2, 0.4, (0.5, -0.3))
    fock = SingleModeFock(gaussian_to_fock(local, 40))
    x = np.linspace(-6, 6, 101)
    for theta in (0.0, 0.9, np.pi / 2):
        assert np.allclose(local_density(fock, theta, x), local_density(local, theta, x), atol=1e-7)


# --- joint distribution -------------------------------------------------------


def test_tmsv_joint_correlation(tmsv_gauss):
    j = joint_distribution(tmsv_gauss)
    mx, my, vx, vy, cxy = j.moments()
    assert cxy / np.sqrt(vx * vy) == pytest.approx(np.tanh(1.0), abs=1e-6)
    assert j.probs.sum() == pytest.approx(1.0)
    assert j.captured_mass > 1 - 1e-8


def test_tmsv_joint_symmetric(tmsv_fock, tmsv_gauss):
    for state in (tmsv_fock, tmsv_gauss):
        j = joint_distribution(state)
        assert np.max(np.abs(j.probs - j.probs.T)) < 1e-10


@pytest.mark.parametrize("r", [0.1, 0.5, 1.0])
@pytest.mark.parametrize("pair", [X_PAIR, P_PAIR, (0.3, -1.1)])
def test_gaussian_and_fock_paths_agree(r, pair):
    fock = make_two_mode_squeezed_vacuum(r, max(40, tmsv_cutoff(r)))
    gauss = make_gaussian_tmsv(r)
    jg = joint_distribution(gauss, *pair)
    jf = joint_distribution(fock, *pair, jg.grid_a, jg.grid_b)
    assert np.max(np.abs(jf.probs - jg.probs)) < 1e-6


def test_mixture_joint_matches_fock_flattening():
    # per-term product sum against the flattened density matrix (brute force)
    m = make_separable_random(5, 3, "fock")
    for pair in (X_PAIR, P_PAIR):
        jm = joint_distribution(m, *pair, n_points=128)
        jf = joint_distribution(mixture_to_density(m, 8, 8), *pair, jm.grid_a, jm.grid_b)
        assert np.max(np.abs(jm.probs - jf.probs)) < 1e-9


def test_mixture_joint_matches_gaussian_products():
    m = make_separable_random(4, 8, "gaussian")
    jm = joint_distribution(m, 0.4, 1.2, n_points=96)
    ref = np.zeros_like(jm.probs)
    for t in m.terms:
        jt = joint_distribution(product_gaussian(t.state_a, t.state_b), 0.4, 1.2, jm.grid_a, jm.grid_b, mass_tol=1.0)
        ref += t.weight * jt.probs * jt.captured_mass
    assert np.max(np.abs(jm.probs - ref / ref.sum())) < 1e-9


def test_mixture_grid_covers_broad_low_weight_term():
    narrow = SingleModeGaussian([0, 0], np.eye(2))
    broad = squeezed_thermal_local(nbar=5.0, mean=(8.0, 0.0))
    m = SeparableMixture((MixtureTerm(0.999, narrow, narrow), MixtureTerm(0.001, broad, narrow)))
    g = auto_grid(m, "A", 0.0)
    assert g.hi >= 8.0 + 6.0 * np.sqrt(11.0) - 1e-9
    joint_distribution(m)


def test_grid_error_on_mass_deficit(tmsv_gauss):
    tiny = QuadratureGrid.symmetric(1.0, 32)
    with pytest.raises(GridError) as err:
        joint_distribution(tmsv_gauss, 0, 0, tiny, tiny)
    assert err.value.deficit > 0.1


def test_csv_export_and_coarsen(tmsv_gauss):
    j = joint_distribution(tmsv_gauss, n_points=64)
    buf = io.StringIO()
    j.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x,y,mass" and len(lines) == 64 * 64 + 1
    assert sum(float(l.split(",")[2]) for l in lines[1:]) == pytest.approx(1.0, abs=1e-9)
    c = j.coarsen(4)
    assert c.probs.shape == (16, 16) and c.probs.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        j.coarsen(5)


def test_total_variation():
    p = np.array([[0.5, 0.5], [0, 0]])
    q = np.array([[0.5, 0], [0.5, 0]])
    assert total_variation(p, q) == 0.5
    with pytest.raises(ValueError):
        total_variation(p, np.ones(3))


# --- conditional profiles -------------------------------------------------------


def test_product_state_conditionals_equal_marginal():
    state = product_gaussian(squeezed_thermal_local(0.2, 0.3, 0.5, (1.0, 0.0)), coherent_local(0.3))
    j = joint_distribution(state)
    prof = conditional_profile(j)
    mx, _, vx, _, _ = j.moments()
    assert np.allclose(prof.means, mx, atol=1e-10)
    assert np.allclose(prof.variances, vx, atol=1e-10)


def test_tmsv_conditionals_are_homoscedastic(tmsv_gauss):
    prof = conditional_profile(joint_distribution(tmsv_gauss))
    central = np.abs(prof.y_values) < 3 * np.sqrt(np.cosh(1.0))
    assert np.allclose(prof.means[central], np.tanh(1.0) * prof.y_values[central], atol=1e-3)
    assert np.allclose(prof.variances[central], 1 / np.cosh(1.0), atol=1e-3)
    assert prof.average_variance == pytest.approx(1 / np.cosh(1.0), abs=1e-4)


def test_classical_two_point_mixture_collapses():
    # far-separated components: conditioning on B picks the matching component at A
    up = SingleModeGaussian([5.0, 0.0], np.eye(2))
    down = SingleModeGaussian([-5.0, 0.0], np.eye(2))
    m = SeparableMixture((MixtureTerm(0.5, up, up), MixtureTerm(0.5, down, down)))
    prof = conditional_profile(joint_distribution(m))
    pos = (prof.y_values > 2) & (prof.y_values < 8)
    neg = (prof.y_values < -2) & (prof.y_values > -8)
    assert np.allclose(prof.means[pos], 5.0, atol=1e-6)
    assert np.allclose(prof.means[neg], -5.0, atol=1e-6)
    assert np.allclose(prof.variances[pos | neg], 1.0, atol=2e-3)


def test_infer_at_b_swaps_roles():
    state = GaussianState(np.zeros(4), np.array([[2, 0, 1, 0], [0, 2, 0, -1], [1, 0, 3, 0], [0, -1, 0, 3.0]]))
    j = joint_distribution(state)
    a = conditional_profile(j).average_variance
    b = conditional_profile(j, infer_at_a=False).average_variance
    assert a == pytest.approx(2 - 1 / 3, abs=1e-4)
    assert b == pytest.approx(3 - 1 / 2, abs=1e-4)


def test_mass_floor_skips_bins(tmsv_gauss):
    prof = conditional_profile(joint_distribution(tmsv_gauss), mass_floor=1e-6)
    assert prof.skipped_mass > 0 and prof.weights.sum() == pytest.approx(1.0)


def test_frozen_tmsv_conditional_value(tmsv_fock):
    # regression value on the default grid (256 points, +-6 sigma)
    j = joint_distribution(tmsv_fock)
    assert conditional_profile(j).average_variance == pytest.approx(0.6480542540, abs=1e-9)


@pytest.mark.parametrize("state_name", ["vacuum", "tmsv", "mix_g", "mix_f"])
def test_refinement_convergence(state_name, vacuum, tmsv_fock):
    state = {
        "vacuum": vacuum,
        "tmsv": tmsv_fock,
        "mix_g": make_separable_random(6, 1, "gaussian"),
        "mix_f": make_separable_random(6, 1, "fock"),
    }[state_name]
    for pair in (X_PAIR, P_PAIR):
        coarse = joint_distribution(state, *pair)
        fine = joint_distribution(state, *pair, coarse.grid_a.refined(), coarse.grid_b.refined())
        diff = conditional_profile(coarse).average_variance - conditional_profile(fine).average_variance
        assert abs(diff) < 1e-4
        assert _law_of_total_variance_gap(coarse) < 1e-6


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 8), st.integers(0, 5000), st.sampled_from(["gaussian", "fock"]), st.floats(0, np.pi))
def test_law_of_total_variance_on_mixtures(n_terms, seed, family, theta):
    m = make_separable_random(n_terms, seed, family)
    j = joint_distribution(m, theta, theta, n_points=64)
    assert _law_of_total_variance_gap(j) < 1e-6
