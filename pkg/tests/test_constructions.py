import numpy as np
import pytest

import carnot_ma as cm
from carnot_ma.linalg import eigvals_sym

from conftest import sample_koranyi


@pytest.fixture(scope="module")
def inner_half_ball():
    return sample_koranyi(200, np.random.default_rng(20), radius=0.5)


@pytest.fixture(scope="module")
def ball_samples():
    return sample_koranyi(400, np.random.default_rng(21), radius=1.0)


# ---------------------------------------------------------------------------
# explicit oracles
# ---------------------------------------------------------------------------

def test_oracle_quartic_values(heis):
    w = cm.explicit_heisenberg_oracle("w_quartic", family=heis)
    assert float(w(np.array([1.0, 0.0, 0.0]))) == 1.0
    assert float(w(np.array([0.0, 0.0, 1.0]))) == 1.0
    jet = w.euclidean_jet(np.array([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(jet.gradient, [4.0, 0.0, 0.0])


def test_oracle_norm_value_and_jets(heis):
    norm = cm.explicit_heisenberg_oracle("koranyi_norm")
    assert float(norm(np.array([0.0, 0.0, 1.0]))) == pytest.approx(1.0)
    x = np.array([0.3, -0.2, 0.4])
    jet = norm.euclidean_jet(x)
    # fourth root of the quartic: cross-check against finite differences
    h = 1e-6
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd = (norm(x + e) - norm(x - e)) / (2 * h)
        assert jet.gradient[k] == pytest.approx(fd, abs=1e-8)
    with pytest.raises(cm.DomainError):
        norm.euclidean_jet(np.zeros(3))


def test_oracle_curvature_value():
    k_h = cm.explicit_heisenberg_oracle("k_H")
    assert float(k_h(np.array([1.0, 0.0, 0.0]))) == \
        pytest.approx((12.0 / 17.0) ** 2, abs=1e-14)


def test_oracle_source_value():
    f = cm.explicit_heisenberg_oracle("f_144")
    assert float(f(np.array([1.0, 0.0, 0.0]))) == 144.0


def test_oracle_rejects_wrong_family():
    fam = cm.euclidean(3)
    with pytest.raises(cm.DimensionMismatchError):
        cm.explicit_heisenberg_oracle("w_quartic", family=fam)
    with pytest.raises(cm.DomainError):
        cm.explicit_heisenberg_oracle("unknown")


# ---------------------------------------------------------------------------
# structural alternative check
# ---------------------------------------------------------------------------

def test_xsquare_heisenberg_holds(heis):
    rng = np.random.default_rng(22)
    holds, eta = cm.xsquare_check(heis, rng.uniform(-1, 1, (100, 3)))
    assert holds
    assert eta == pytest.approx(1.0, abs=1e-12)  # sigma^T sigma >= I


# ---------------------------------------------------------------------------
# perturbation to strict subsolutions
# ---------------------------------------------------------------------------

def test_perturb_zero_epsilon_returns_input(heis, w_quartic,
                                            maheis_hamiltonian,
                                            inner_half_ball, ball_samples):
    u_eps, params = cm.perturb_to_strict(w_quartic, heis, maheis_hamiltonian,
                                         inner_half_ball, 0.0,
                                         domain_samples=ball_samples)
    assert params.alpha == 0.0
    for x in inner_half_ball[:20]:
        assert float(u_eps(x)) == pytest.approx(float(w_quartic(x)),
                                                abs=1e-15)


def test_perturb_strict_margin_and_modulus(heis, w_quartic,
                                           maheis_hamiltonian,
                                           inner_half_ball, ball_samples):
    u_eps, params = cm.perturb_to_strict(w_quartic, heis, maheis_hamiltonian,
                                         inner_half_ball, 1e-2,
                                         domain_samples=ball_samples)
    assert params.alpha > 0
    assert params.epsilon <= params.epsilon0
    min_exp = float(np.min(np.exp(0.5 * params.mu * (
        inner_half_ball[:, 0] ** 2 + inner_half_ball[:, 1] ** 2))))
    assert params.convexity_modulus >= params.epsilon * params.mu * min_exp \
        - 1e-9
    # the perturbed function never exceeds the original
    for x in ball_samples[:100]:
        assert float(u_eps(x)) <= float(w_quartic(x)) + 1e-12


def test_perturb_euclidean_trivial_case():
    fam = cm.euclidean(2)
    half = cm.ClosedFormFunction(
        lambda x: 0.5 * np.sum(np.asarray(x, float) ** 2, axis=-1),
        lambda x: np.asarray(x, float),
        lambda x: np.eye(2), name="|x|^2/2")
    h0 = cm.Hamiltonian.constant(0.0)
    rng = np.random.default_rng(23)
    pts = rng.uniform(-1, 1, (100, 2))
    u_eps, params = cm.perturb_to_strict(half, fam, h0, pts, 0.05)
    assert params.alpha > 0


def test_perturb_adds_identity_plus_rank_one(heis, w_quartic,
                                             maheis_hamiltonian,
                                             inner_half_ball, ball_samples):
    eps = 1e-2
    u_eps, params = cm.perturb_to_strict(w_quartic, heis, maheis_hamiltonian,
                                         inner_half_ball, eps,
                                         domain_samples=ball_samples)
    for x in inner_half_ball[:50]:
        base = cm.horizontal_jet_exact(heis, x, w_quartic.euclidean_jet(x))
        pert = cm.horizontal_jet_exact(heis, x, u_eps.euclidean_jet(x))
        nu = eps * params.mu * np.exp(0.5 * params.mu
                                      * (x[0] ** 2 + x[1] ** 2))
        expected = base.h_hessian + nu * (np.eye(2) + params.mu
                                          * np.outer(x[:2], x[:2]))
        np.testing.assert_allclose(pert.h_hessian, expected, atol=1e-10)
        # both added pieces are PSD
        assert eigvals_sym(pert.h_hessian - base.h_hessian)[0] >= -1e-12


def test_perturb_sup_gap_linear_in_epsilon(heis, w_quartic,
                                           maheis_hamiltonian,
                                           inner_half_ball, ball_samples):
    gaps = []
    eps_values = (1e-1, 1e-2, 1e-3)
    for eps in eps_values:
        u_eps, params = cm.perturb_to_strict(
            w_quartic, heis, maheis_hamiltonian, inner_half_ball, eps,
            domain_samples=ball_samples, mu=1.0)
        gap = max(abs(float(w_quartic(x)) - float(u_eps(x)))
                  for x in ball_samples[:200])
        gaps.append(gap)
    assert gaps[0] / gaps[1] == pytest.approx(10.0, rel=1e-6)
    assert gaps[1] / gaps[2] == pytest.approx(10.0, rel=1e-6)


def test_perturb_margin_monotone_in_mu(heis, w_quartic, maheis_hamiltonian,
                                       inner_half_ball, ball_samples):
    alphas = []
    for mu in (1.0, 2.0, 4.0, 8.0):
        _, params = cm.perturb_to_strict(w_quartic, heis, maheis_hamiltonian,
                                         inner_half_ball, 1e-3,
                                         domain_samples=ball_samples, mu=mu)
        alphas.append(params.alpha)
    assert all(b >= a - 1e-12 for a, b in zip(alphas, alphas[1:]))


def test_perturb_rejects_epsilon_above_cap(heis, w_quartic,
                                           maheis_hamiltonian,
                                           inner_half_ball, ball_samples):
    with pytest.raises(cm.ConstructionError):
        cm.perturb_to_strict(w_quartic, heis, maheis_hamiltonian,
                             inner_half_ball, 50.0,
                             domain_samples=ball_samples, mu=1.0)


def test_perturb_rejects_nonconvex_input(heis, maheis_hamiltonian,
                                         inner_half_ball):
    concave = cm.ClosedFormFunction(
        lambda x: -np.sum(np.asarray(x, float) ** 2, axis=-1),
        lambda x: -2.0 * np.asarray(x, float),
        lambda x: -2.0 * np.eye(3))
    with pytest.raises(cm.ConstructionError):
        cm.perturb_to_strict(concave, heis, maheis_hamiltonian,
                             inner_half_ball, 1e-2)


def test_perturb_rejects_unstructured_family(maheis_hamiltonian):
    # degenerate family: the single field vanishes identically, so
    # sigma^T sigma + Q(x, x) = 0 and neither structural hypothesis holds
    def sig(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (2, 1))

    fam = cm.general_family(2, 1, sig)
    flat = cm.ClosedFormFunction(
        lambda x: np.zeros(np.asarray(x, float).shape[:-1]),
        lambda x: np.zeros(2), lambda x: np.zeros((2, 2)))
    h0 = cm.Hamiltonian.constant(0.0)
    rng = np.random.default_rng(24)
    pts = rng.uniform(-1, 1, (50, 2))
    with pytest.raises(cm.UnsupportedFamilyError):
        cm.perturb_to_strict(flat, fam, h0, pts, 1e-2)


# ---------------------------------------------------------------------------
# lower barrier
# ---------------------------------------------------------------------------

def test_lower_barrier_euclidean_ball(heis):
    ball = cm.euclidean_ball(1.0)
    g0 = cm.constant_function(0.0, 3)
    h1 = cm.Hamiltonian.constant(1.0)
    rng = np.random.default_rng(25)
    w, params = cm.lower_barrier(ball, g0, heis, h1, rng=rng)
    assert params.gamma == pytest.approx(2.0, abs=1e-9)
    # boundary match and interior ordering
    bnd = ball.sample_boundary(200, rng, tol=1e-15)
    assert np.max(np.abs(np.asarray(w(bnd)))) <= 1e-12
    interior = ball.sample_interior(200, rng)
    assert np.max(np.asarray(w(interior))) < 0.0
    # sampled subsolution and convexity checks at fresh samples
    for x in interior[:100]:
        jet = cm.horizontal_jet_exact(heis, x, w.euclidean_jet(x))
        assert eigvals_sym(jet.h_hessian)[0] >= -1e-8
        assert cm.ma_residual("det", x, jet.value, jet, h1) <= 1e-8


def test_lower_barrier_zero_hamiltonian(heis):
    ball = cm.euclidean_ball(1.0)
    g0 = cm.constant_function(0.0, 3)
    h0 = cm.Hamiltonian.constant(0.0)
    w, params = cm.lower_barrier(ball, g0, heis, h0,
                                 rng=np.random.default_rng(26))
    rng = np.random.default_rng(27)
    for x in ball.sample_interior(50, rng):
        jet = cm.horizontal_jet_exact(heis, x, w.euclidean_jet(x))
        assert cm.ma_residual("det", x, jet.value, jet, h0) <= 1e-10


def test_lower_barrier_rejects_gauss(heis):
    ball = cm.euclidean_ball(1.0)
    g0 = cm.constant_function(0.0, 3)
    h_gauss = cm.Hamiltonian.gauss(cm.constant_function(0.5, 3), 2)
    with pytest.raises(cm.ConstructionError):
        cm.lower_barrier(ball, g0, heis, h_gauss,
                         rng=np.random.default_rng(28))


def test_lower_barrier_rejects_koranyi_ball(heis):
    # characteristic boundary points break uniform convexity of the domain
    dom = cm.koranyi_ball(1.0)
    g0 = cm.constant_function(0.0, 3)
    with pytest.raises(cm.ConstructionError):
        cm.lower_barrier(dom, g0, heis, cm.Hamiltonian.constant(1.0),
                         rng=np.random.default_rng(29))


def test_lower_barrier_nonzero_boundary_data(heis):
    ball = cm.euclidean_ball(1.0)
    g = cm.PolynomialFunction([(1, 0, 0), (0, 0, 0)], [0.5, 1.0], name="g")
    h1 = cm.Hamiltonian.constant(1.0)
    rng = np.random.default_rng(30)
    w, params = cm.lower_barrier(ball, g, heis, h1, rng=rng)
    bnd = ball.sample_boundary(100, rng, tol=1e-15)
    assert np.max(np.abs(np.asarray(w(bnd)) - np.asarray(g(bnd)))) <= 1e-12
    interior = ball.sample_interior(100, rng)
    assert np.all(np.asarray(w(interior)) < np.asarray(g(interior)))


# ---------------------------------------------------------------------------
# upper barrier
# ---------------------------------------------------------------------------

def test_upper_barrier_zero_case(heis):
    ball = cm.euclidean_ball(1.0)
    result = cm.upper_barrier(ball, cm.constant_function(0.0, 3), heis)
    assert result.case == "zero"
    assert float(result.function(np.zeros(3))) == 0.0


def test_upper_barrier_constant_case(heis):
    dom = cm.koranyi_ball(1.0)
    g = cm.PolynomialFunction([(2, 0, 0), (0, 0, 0)], [1.0, 0.5])
    result = cm.upper_barrier(dom, g, heis, mode="constant")
    assert result.case == "constant"
    assert result.certified_by == "convention"
    top = float(result.function(np.zeros(3)))
    # constant equals the sampled boundary maximum; the true supremum of g
    # on the boundary is 1.5 (at x1 = +-1), so allow sampling slack
    assert 1.4 <= top <= 1.5 + 1e-12


def test_upper_barrier_uniform_case(heis):
    ball = cm.euclidean_ball(1.0)
    sq = cm.ClosedFormFunction(
        lambda x: np.sum(np.asarray(x, float) ** 2, axis=-1),
        lambda x: 2.0 * np.asarray(x, float),
        lambda x: 2.0 * np.eye(3), name="|x|^2")
    result = cm.upper_barrier(ball, sq, heis)
    assert result.case in ("xconvex", "uniform")
    rng = np.random.default_rng(32)
    for x in ball.sample_interior(100, rng):
        jet = cm.horizontal_jet_exact(heis, x,
                                      result.function.euclidean_jet(x))
        assert eigvals_sym(jet.h_hessian)[-1] <= 1e-8


def test_upper_barrier_flat_data_on_convex_domain(heis):
    # the Koranyi ball is convex along the fields (not uniformly), and an
    # affine g has zero horizontal Hessian, so the subtraction case applies
    dom = cm.koranyi_ball(1.0)
    g = cm.PolynomialFunction([(1, 0, 0)], [1.0])
    result = cm.upper_barrier(dom, g, heis)
    assert result.case == "xconvex"


def test_upper_barrier_rejects_hopeless_case(heis):
    # concave boundary data on a domain that is not uniformly convex along
    # the fields: neither the subtraction nor the uniform case applies
    dom = cm.koranyi_ball(1.0)
    g = cm.ClosedFormFunction(
        lambda x: -np.sum(np.asarray(x, float) ** 2, axis=-1),
        lambda x: -2.0 * np.asarray(x, float),
        lambda x: -2.0 * np.eye(3), name="-|x|^2")
    with pytest.raises(cm.ConstructionError):
        cm.upper_barrier(dom, g, heis)
