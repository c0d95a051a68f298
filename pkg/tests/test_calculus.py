import numpy as np
import pytest

import carnot_ma as cm
from carnot_ma.calculus import euclidean_fd_gradient

from conftest import sample_koranyi


def quartic(x):
    x = np.asarray(x, dtype=float)
    return (x[..., 0] ** 2 + x[..., 1] ** 2) ** 2 + x[..., 2] ** 2


def test_exact_jet_known_point(heis, w_quartic):
    x = np.array([1.0, 0.0, 0.0])
    jet = cm.horizontal_jet_exact(heis, x, w_quartic.euclidean_jet(x))
    np.testing.assert_allclose(jet.h_gradient, [4.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(jet.h_hessian, 12.0 * np.eye(2), atol=1e-14)


def test_exact_jet_gradient_norm_identity(heis, w_quartic):
    x = np.array([0.0, 1.0, 2.0])
    jet = cm.horizontal_jet_exact(heis, x, w_quartic.euclidean_jet(x))
    np.testing.assert_allclose(jet.h_gradient, [8.0, 4.0], atol=1e-13)
    assert jet.h_gradient @ jet.h_gradient == pytest.approx(80.0, abs=1e-12)


def test_exact_jet_constant_function(heis):
    c = cm.constant_function(3.5, 3)
    x = np.array([0.3, -0.4, 0.2])
    jet = cm.horizontal_jet_exact(heis, x, c.euclidean_jet(x))
    np.testing.assert_allclose(jet.h_gradient, 0, atol=1e-15)
    np.testing.assert_allclose(jet.h_hessian, 0, atol=1e-15)


def test_second_difference_euclidean_quadratic_exact():
    fam = cm.euclidean(2)

    def u(x):
        return float(np.asarray(x)[0] ** 2)

    for h in (0.5, 0.1, 0.02):
        val = cm.directional_second_difference(u, fam, np.array([0.3, -1.0]),
                                               np.array([1.0, 0.0]), h)
        assert val == pytest.approx(2.0, abs=1e-9)


def test_second_difference_chord_value(heis):
    # chord through (1, 0, 0) along the first field: ((1+h)^4 + (1-h)^4 - 2)/h^2
    x = np.array([1.0, 0.0, 0.0])
    for h in (0.2, 0.1, 0.05):
        val = cm.directional_second_difference(quartic, heis, x,
                                               np.array([1.0, 0.0]), h)
        assert val == pytest.approx(12.0 + 2.0 * h ** 2, abs=1e-9)


def test_second_difference_affine_is_zero(heis):
    def u(x):
        x = np.asarray(x, dtype=float)
        return 2.0 * x[..., 0] - x[..., 1] + 0.5 * x[..., 2] + 4.0

    rng = np.random.default_rng(2)
    for _ in range(10):
        x = rng.uniform(-1, 1, 3)
        v = rng.standard_normal(2)
        v /= np.linalg.norm(v)
        val = cm.directional_second_difference(u, heis, x, v, 0.1)
        assert val == pytest.approx(0.0, abs=1e-10)


def test_fd_jet_close_to_exact(heis, w_quartic):
    x = np.array([1.0, 0.0, 0.0])
    jet = cm.horizontal_jet_fd(quartic, heis, x, 0.01)
    np.testing.assert_allclose(jet.h_hessian, 12.0 * np.eye(2), atol=1e-3)
    np.testing.assert_allclose(jet.h_gradient, [4.0, 0.0], atol=1e-3)


def test_fd_jet_constant(heis):
    def u(x):
        return 7.0

    jet = cm.horizontal_jet_fd(u, heis, np.array([0.2, 0.1, -0.3]), 0.05)
    np.testing.assert_allclose(jet.h_gradient, 0, atol=1e-12)
    np.testing.assert_allclose(jet.h_hessian, 0, atol=1e-10)


def test_fd_jet_euclidean_quadratic_exact():
    fam = cm.euclidean(3)

    def u(x):
        x = np.asarray(x, dtype=float)
        return float(np.sum(x * x))

    for h in (0.3, 0.05):
        jet = cm.horizontal_jet_fd(u, fam, np.array([0.1, 0.2, -0.4]), h)
        np.testing.assert_allclose(jet.h_hessian, 2.0 * np.eye(3),
                                   atol=1e-8)


def _jet_error(fam, u_exact, x, h):
    fd = cm.horizontal_jet_fd(quartic, fam, x, h)
    exact = cm.horizontal_jet_exact(fam, x, u_exact.euclidean_jet(x))
    return max(np.max(np.abs(fd.h_gradient - exact.h_gradient)),
               np.max(np.abs(fd.h_hessian - exact.h_hessian)))


def test_fd_jet_second_order_convergence(heis, w_quartic):
    rng = np.random.default_rng(42)
    pts = sample_koranyi(50, rng, radius=0.9)
    steps = (0.1, 0.05, 0.025)
    errs = []
    for h in steps:
        errs.append(max(_jet_error(heis, w_quartic, x, h) for x in pts))
    order1 = np.log2(errs[0] / errs[1])
    order2 = np.log2(errs[1] / errs[2])
    assert order1 >= 1.8
    assert order2 >= 1.8


def test_fd_jet_random_quartics_converge(heis):
    # random quartic polynomials in (x1, x2, t): compare fd jets against
    # jets assembled from exact polynomial derivatives
    rng = np.random.default_rng(8)
    exps = [(4, 0, 0), (0, 4, 0), (2, 2, 0), (0, 0, 2), (2, 0, 1),
            (1, 1, 1), (2, 0, 0), (0, 1, 1), (1, 0, 0), (0, 0, 0)]
    for _ in range(5):
        coeffs = rng.uniform(-1, 1, len(exps))
        poly = cm.PolynomialFunction(exps, coeffs)
        x = rng.uniform(-0.5, 0.5, 3)
        exact = cm.horizontal_jet_exact(heis, x, poly.euclidean_jet(x))
        errs = []
        for h in (0.1, 0.05, 0.025):
            fd = cm.horizontal_jet_fd(poly, heis, x, h)
            errs.append(max(np.max(np.abs(fd.h_gradient - exact.h_gradient)),
                            np.max(np.abs(fd.h_hessian - exact.h_hessian))))
        if errs[0] > 1e-10:  # skip accidentally tiny-error draws
            assert np.log2(errs[0] / max(errs[2], 1e-16)) / 2.0 >= 1.5


def test_fd_jet_frame_invariance(heis, w_quartic):
    rng = np.random.default_rng(33)
    x = np.array([0.4, -0.3, 0.2])
    base = cm.horizontal_jet_fd(quartic, heis, x, 0.02)
    for _ in range(5):
        theta = rng.uniform(0, 2 * np.pi)
        rot = np.array([[np.cos(theta), -np.sin(theta)],
                        [np.sin(theta), np.cos(theta)]])
        rotated = cm.horizontal_jet_fd(quartic, heis, x, 0.02, frame=rot)
        # both estimate the same matrix; difference bounded by truncation
        assert np.max(np.abs(rotated.h_hessian - base.h_hessian)) < 5e-3


def test_polarization_consistency(heis):
    # off-diagonal entries from the rotated-pair differences agree with a
    # direct mixed chord difference
    def u(x):
        x = np.asarray(x, dtype=float)
        return x[..., 0] ** 2 + 3.0 * x[..., 0] * x[..., 1] + x[..., 2] ** 2

    x = np.array([0.2, 0.1, -0.1])
    h = 0.02
    jet = cm.horizontal_jet_fd(u, heis, x, h)
    sqrt2 = np.sqrt(2.0)
    plus = cm.directional_second_difference(
        u, heis, x, np.array([1.0, 1.0]) / sqrt2, h)
    minus = cm.directional_second_difference(
        u, heis, x, np.array([1.0, -1.0]) / sqrt2, h)
    assert jet.h_hessian[0, 1] == pytest.approx(0.5 * (plus - minus),
                                                abs=1e-9)


def test_fd_gradient_centered():
    def u(x):
        x = np.asarray(x, dtype=float)
        return float(x[0] ** 3 + 2.0 * x[1])

    g = euclidean_fd_gradient(u, np.array([1.0, 0.0]), 1e-4)
    np.testing.assert_allclose(g, [3.0, 2.0], atol=1e-7)


def test_domain_error_propagates(heis):
    def u(x):
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(x) > 0.1:
            raise cm.DomainError("outside")
        return 0.0

    with pytest.raises(cm.DomainError):
        cm.horizontal_jet_fd(u, heis, np.zeros(3), 0.2)
