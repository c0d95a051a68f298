import numpy as np
import pytest

import carnot_ma as cm
from carnot_ma.linalg import eigvals_sym, random_spd
from carnot_ma.operators import (random_detroot_feasible,
                                 random_logdet_feasible)

from conftest import sample_koranyi


# ---------------------------------------------------------------------------
# small symmetric eigenvalues (closed forms feed the solver's inner loop)
# ---------------------------------------------------------------------------

def test_eigvals_sym_matches_lapack():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3, 4):
        mats = random_spd(n, rng, count=200, eig_range=(-2.0, 3.0))
        mine = eigvals_sym(mats)
        ref = np.linalg.eigvalsh(mats)
        np.testing.assert_allclose(mine, ref, atol=1e-9)


def test_eigvals_sym_diagonal_3x3():
    a = np.diag([3.0, -1.0, 2.0])
    np.testing.assert_allclose(eigvals_sym(a), [-1.0, 2.0, 3.0], atol=1e-12)
    np.testing.assert_allclose(eigvals_sym(2.0 * np.eye(3)), [2.0, 2.0, 2.0])


# ---------------------------------------------------------------------------
# residual forms
# ---------------------------------------------------------------------------

def test_residual_quartic_solves_source_problem(heis, w_quartic,
                                                maheis_hamiltonian):
    x = np.array([1.0, 0.0, 0.0])
    jet = cm.horizontal_jet_exact(heis, x, w_quartic.euclidean_jet(x))
    res = cm.ma_residual("det", x, jet.value, jet, maheis_hamiltonian)
    assert res == pytest.approx(0.0, abs=1e-10)


def test_residual_quartic_solves_curvature_problem(heis, w_quartic):
    k_h = cm.explicit_heisenberg_oracle("k_H")
    h = cm.Hamiltonian.gauss(k_h, 2)
    x = np.array([1.0, 0.0, 0.0])
    jet = cm.horizontal_jet_exact(heis, x, w_quartic.euclidean_jet(x))
    # det = 144 and k(1+16)^2 = (12/17)^2 * 289 = 144
    assert cm.ma_residual("det", x, jet.value, jet, h) == \
        pytest.approx(0.0, abs=1e-9)


def test_residual_zero_hessian_zero_h():
    jet = cm.HorizontalJet(0.0, np.zeros(2), np.zeros((2, 2)))
    h0 = cm.Hamiltonian.constant(0.0)
    x = np.zeros(3)
    assert cm.ma_residual("det", x, 0.0, jet, h0) == 0.0
    assert cm.ma_residual("maxform", x, 0.0, jet, h0) == 0.0


def test_residual_root_clamps_indefinite():
    jet = cm.HorizontalJet(0.0, np.zeros(2), np.diag([1.0, -1.0]))
    h1 = cm.Hamiltonian.constant(1.0)
    assert cm.ma_residual("root", np.zeros(3), 0.0, jet, h1) == \
        pytest.approx(1.0)
    # maxform sees the negative eigenvalue
    assert cm.ma_residual("maxform", np.zeros(3), 0.0, jet, h1) == \
        pytest.approx(1.0)


def test_residual_logdet_domain_errors():
    h1 = cm.Hamiltonian.constant(1.0)
    h0 = cm.Hamiltonian.constant(0.0)
    x = np.zeros(3)
    bad = cm.HorizontalJet(0.0, np.zeros(2), np.diag([1.0, -1.0]))
    good = cm.HorizontalJet(0.0, np.zeros(2), np.eye(2))
    with pytest.raises(cm.DomainError):
        cm.ma_residual("logdet", x, 0.0, bad, h1)
    with pytest.raises(cm.DomainError):
        cm.ma_residual("logdet", x, 0.0, good, h0)
    assert cm.ma_residual("logdet", x, 0.0, good, h1) == pytest.approx(0.0)


def test_det_and_logdet_residuals_agree_in_sign():
    rng = np.random.default_rng(1)
    x = np.zeros(3)
    for _ in range(1000):
        a = random_spd(2, rng, eig_range=(0.05, 3.0))
        hval = rng.uniform(0.01, 5.0)
        ham = cm.Hamiltonian.constant(hval)
        jet = cm.HorizontalJet(0.0, np.zeros(2), a)
        det_res = cm.ma_residual("det", x, 0.0, jet, ham)
        log_res = cm.ma_residual("logdet", x, 0.0, jet, ham)
        if abs(det_res) > 1e-12:
            assert np.sign(det_res) == np.sign(log_res)


def test_maxform_nonpositive_implies_both_branches():
    rng = np.random.default_rng(2)
    x = np.zeros(3)
    hits = 0
    for _ in range(500):
        a = random_spd(2, rng, eig_range=(-1.0, 3.0))
        ham = cm.Hamiltonian.constant(rng.uniform(0.0, 3.0))
        jet = cm.HorizontalJet(0.0, np.zeros(2), a)
        res = cm.ma_residual("maxform", x, 0.0, jet, ham)
        if res <= 0:
            hits += 1
            eigs = eigvals_sym(a)
            detplus = np.prod(np.maximum(eigs, 0.0))
            assert eigs[0] >= 0
            assert detplus ** 0.5 >= float(ham(x, 0.0, np.zeros(2))) ** 0.5 \
                - 1e-12
    assert hits > 10


def test_gauss_curvature_known_values(heis, w_quartic):
    x = np.array([1.0, 0.0, 0.0])
    jet = cm.horizontal_jet_exact(heis, x, w_quartic.euclidean_jet(x))
    assert cm.gauss_curvature(heis, x, jet) == \
        pytest.approx((12.0 / 17.0) ** 2, abs=1e-12)
    # on the symmetry axis the horizontal Hessian vanishes
    x_axis = np.array([0.0, 0.0, 0.7])
    jet_axis = cm.horizontal_jet_exact(heis, x_axis,
                                       w_quartic.euclidean_jet(x_axis))
    assert cm.gauss_curvature(heis, x_axis, jet_axis) == \
        pytest.approx(0.0, abs=1e-12)
    flat = cm.HorizontalJet(0.0, np.zeros(2), np.zeros((2, 2)))
    assert cm.gauss_curvature(heis, x, flat) == 0.0


def test_gauss_curvature_formula_on_ball(heis, w_quartic):
    k_h = cm.explicit_heisenberg_oracle("k_H")
    rng = np.random.default_rng(3)
    for x in sample_koranyi(1000, rng):
        jet = cm.horizontal_jet_exact(heis, x, w_quartic.euclidean_jet(x))
        assert abs(cm.gauss_curvature(heis, x, jet) - float(k_h(x))) <= 1e-10


# ---------------------------------------------------------------------------
# minimum representations
# ---------------------------------------------------------------------------

def test_detroot_identity():
    rep = cm.detroot_min_representation(np.eye(2))
    assert rep.value == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(rep.minimizer, np.eye(2) / 2.0, atol=1e-12)


def test_detroot_diagonal():
    rep = cm.detroot_min_representation(np.diag([1.0, 4.0]))
    assert rep.value == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(rep.minimizer, np.diag([1.0, 0.25]),
                               atol=1e-12)


def test_detroot_singular_limit():
    a = np.diag([1.0, 0.0])
    rng = np.random.default_rng(4)
    feas = random_detroot_feasible(2, 10000, rng)
    rep = cm.detroot_min_representation(a, feasible=feas)
    # randomized competitors stay positive; the built-in shrinking family
    # realizes the infimum 0 in the limit
    assert 0.0 <= rep.value <= 1e-6
    brute = np.einsum("kij,ji->k", feas, a)
    assert np.min(brute) >= rep.value - 1e-12


def test_detroot_competitors_never_beat_minimizer():
    rng = np.random.default_rng(5)
    for n in (2, 3):
        for _ in range(50):
            a = random_spd(n, rng)
            rep = cm.detroot_min_representation(a)
            feas = random_detroot_feasible(n, 200, rng)
            traces = np.einsum("kij,ji->k", feas, a)
            assert np.min(traces) >= rep.value - 1e-10
            # feasibility of the sampled family
            np.testing.assert_allclose(np.linalg.det(feas), n ** -float(n),
                                       rtol=1e-9)


def test_detroot_rejects_indefinite():
    with pytest.raises(cm.DomainError):
        cm.detroot_min_representation(np.diag([1.0, -0.5]))


def test_detroot_concave_under_averaging():
    rng = np.random.default_rng(6)
    for _ in range(200):
        n = int(rng.choice((2, 3)))
        a = random_spd(n, rng)
        b = random_spd(n, rng)
        va = cm.detroot_min_representation(a).value
        vb = cm.detroot_min_representation(b).value
        vm = cm.detroot_min_representation(0.5 * (a + b)).value
        assert vm >= 0.5 * (va + vb) - 1e-10


def test_logdet_scaled_identity():
    rep = cm.logdet_min_representation(np.e * np.eye(2), 1.0)
    assert rep.value == pytest.approx(2.0, abs=1e-12)
    assert rep.a == pytest.approx(np.e, abs=1e-12)
    np.testing.assert_allclose(rep.minimizer, np.eye(2) / np.e, atol=1e-12)


def test_logdet_identity():
    rep = cm.logdet_min_representation(np.eye(3), 1.0)
    assert rep.value == pytest.approx(0.0, abs=1e-12)
    assert rep.a == pytest.approx(1.0)
    np.testing.assert_allclose(rep.minimizer, np.eye(3), atol=1e-12)


def test_logdet_minimizer_feasible_and_optimal():
    rng = np.random.default_rng(7)
    gamma = 0.2
    for _ in range(200):
        n = int(rng.choice((2, 3)))
        a = random_spd(n, rng, eig_range=(gamma, 4.0))
        rep = cm.logdet_min_representation(a, gamma)
        target = float(np.log(np.linalg.det(a)))
        assert rep.value == pytest.approx(target, abs=1e-10)
        # minimizer feasibility: det M = a^-N and 0 <= M <= I/gamma
        assert np.linalg.det(rep.minimizer) == \
            pytest.approx(rep.a ** -n, rel=1e-9)
        eigs = np.linalg.eigvalsh(rep.minimizer)
        assert eigs[0] >= -1e-12 and eigs[-1] <= 1.0 / gamma + 1e-9
        for a_val, m_val in random_logdet_feasible(n, gamma, 5, rng):
            obj = n * np.log(a_val) - n + float(np.trace(a @ m_val))
            assert obj >= rep.value - 1e-10


def test_logdet_rejects_small_eigenvalue():
    with pytest.raises(cm.DomainError):
        cm.logdet_min_representation(0.5 * np.eye(2), 1.0)


# ---------------------------------------------------------------------------
# inequality suite
# ---------------------------------------------------------------------------

def test_inequality_examples():
    q = np.array([3.0, 4.0])
    assert np.linalg.det(np.eye(2) + np.outer(q, q)) == pytest.approx(26.0)
    # superadditivity with equality at A = B = I
    assert np.linalg.det(2.0 * np.eye(2)) ** 0.5 == pytest.approx(2.0)
    # shifted determinant example: eta = mu = 1, q = e1
    a = np.eye(2)
    lhs = np.linalg.det(a + np.outer([1.0, 0], [1.0, 0]))
    assert lhs == pytest.approx(2.0) and lhs >= 1.5


def test_inequality_suite_clean():
    report = cm.matrix_inequality_suite(10000, rng_seed=123)
    assert report.passed
    assert all(v == 0 for v in report.violations.values())
    assert report.worst_margins["minkowski"] >= -1e-10
    assert report.worst_margins["shifted_det"] >= -1e-10


def test_inequality_suite_deterministic():
    r1 = cm.matrix_inequality_suite(500, rng_seed=9)
    r2 = cm.matrix_inequality_suite(500, rng_seed=9)
    assert r1.worst_margins == r2.worst_margins


def test_inequality_suite_needs_trials():
    with pytest.raises(cm.DomainError):
        cm.matrix_inequality_suite(0)


# ---------------------------------------------------------------------------
# growth / Lipschitz checks
# ---------------------------------------------------------------------------

def test_growth_subcritical_passes():
    # alpha = m/2 keeps the root linear in |q|
    k = cm.constant_function(2.0, 3)
    h = cm.Hamiltonian.separable(k, 1.0)  # m = 2, alpha = 1 = m/2
    report = cm.growth_check(h, 1.0, np.zeros((1, 3)), 2)
    assert report.passes
    assert np.isfinite(report.L)


def test_growth_gauss_fails():
    k = cm.constant_function(1.0, 3)
    h = cm.Hamiltonian.gauss(k, 2)
    report = cm.growth_check(h, 1.0, np.zeros((1, 3)), 2)
    assert not report.passes
    assert report.exponent > 1.5  # (m+2)/m = 2 for m = 2


def test_growth_constant_passes_with_zero_slope():
    h = cm.Hamiltonian.constant(4.0)
    report = cm.growth_check(h, 1.0, np.zeros((1, 3)), 2)
    assert report.passes
    assert report.L == pytest.approx(0.0, abs=1e-12)
    assert report.M >= 2.0  # sqrt(4)


def test_lipschitz_source_is_zero():
    f = cm.constant_function(3.0, 3)
    h = cm.Hamiltonian.source(f)
    report = cm.lipschitz_root_check(h, 1.0, np.zeros((1, 3)), 2)
    assert report.passes
    assert report.L_R == pytest.approx(0.0, abs=1e-12)


def test_lipschitz_gauss_finite():
    k = cm.constant_function(1.0, 3)
    h = cm.Hamiltonian.gauss(k, 2)
    report = cm.lipschitz_root_check(h, 2.0, np.zeros((1, 3)), 2,
                                     rng=np.random.default_rng(1))
    assert report.passes
    assert 0.0 < report.L_R < 10.0


def test_lipschitz_transport_finite_on_box():
    f = cm.constant_function(1.0, 3)
    h = cm.Hamiltonian.transport_power(f, 3.0)  # alpha > m = 2
    report = cm.lipschitz_root_check(h, 1.0, np.zeros((1, 3)), 2,
                                     rng=np.random.default_rng(2))
    assert report.passes
    assert np.isfinite(report.L_R)


def test_hamiltonian_broadcasting():
    k = cm.constant_function(2.0, 3)
    h = cm.Hamiltonian.separable(k, 1.5)
    x = np.zeros((5, 3))
    q = np.ones((5, 2))
    vals = h(x, 0.0, q)
    assert vals.shape == (5,)
    np.testing.assert_allclose(vals, 2.0 * 3.0 ** 1.5)
    roots = h.root(x, 0.0, q)
    np.testing.assert_allclose(roots, vals ** 0.5)


def test_hamiltonian_flags():
    assert not cm.Hamiltonian.constant(1.0).depends_on_q
    assert not cm.Hamiltonian.source(cm.constant_function(1.0, 3)).depends_on_q
    assert cm.Hamiltonian.gauss(cm.constant_function(1.0, 3), 2).depends_on_q
    k_r = cm.Hamiltonian.separable(lambda x, r: np.maximum(r, 0.0), 1.0,
                                   k_takes_r=True)
    assert k_r.depends_on_r
