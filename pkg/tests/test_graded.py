import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncresidue import Grading, QuasiNorm, dilate, quasi_norm, sphere_quadrature, surface_area
from ncresidue.graded import MAX_SPHERE_NODES, euler_density

H1 = Grading.heisenberg(1)
# keep dilated coordinates out of the subnormal range, where floats carry only a few bits
finite = st.floats(-50, 50, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-280)
scales = st.floats(1e-3, 1e3)


def monomial_moment(alpha):
    """Closed form of int_{S^(d-1)} prod x_i^a_i dsigma."""
    if any(a % 2 for a in alpha):
        return 0.0
    d = len(alpha)
    num = math.prod(math.gamma((a + 1) / 2) for a in alpha)
    return 2 * num / math.gamma((sum(alpha) + d) / 2)


def test_grading_basics():
    assert Grading.trivial(3).d_H == 3
    assert H1.weights == (2, 1, 1) and H1.d_H == 4
    assert Grading.heisenberg(1, 2).weights == (2, 1, 1, 1, 1)
    with pytest.raises(ValueError):
        Grading((1, 0))
    with pytest.raises(ValueError):
        Grading(())
    with pytest.raises(ValueError):
        Grading.heisenberg(0, 0)


def test_dilate_examples():
    np.testing.assert_allclose(dilate(Grading.trivial(2), 3, [1, 1]), [3, 3])
    np.testing.assert_allclose(dilate(H1, 2, [1, 1, 1]), [4, 2, 2])
    p = np.array([0.3, -1.2, 5.0])
    np.testing.assert_array_equal(dilate(H1, 1.0, p), p)


@pytest.mark.parametrize("s", [0.0, -1.0])
def test_dilate_rejects_nonpositive(s):
    with pytest.raises(ValueError):
        dilate(H1, s, [1, 1, 1])


def test_dilate_dimension_mismatch():
    with pytest.raises(ValueError):
        dilate(H1, 2.0, [1.0, 1.0])


def test_quasi_norm_examples():
    assert quasi_norm(QuasiNorm(Grading.trivial(2)), [3, 4]) == pytest.approx(5.0, abs=0)
    assert quasi_norm(QuasiNorm(H1), [1, 0, 0]) == pytest.approx(1.0, rel=1e-15)
    assert quasi_norm(QuasiNorm(H1), [0, 0, 0]) == 0.0


def test_quasi_norm_extreme_scales_do_not_overflow():
    qn = QuasiNorm(H1)
    for s in (1e-150, 1e150):
        v = dilate(H1, s, [0.3, 0.4, -0.5])
        assert qn(v) == pytest.approx(s * qn([0.3, 0.4, -0.5]), rel=1e-12)


@given(st.lists(finite, min_size=3, max_size=3), scales)
def test_quasi_norm_homogeneous(xi, s):
    qn = QuasiNorm(H1)
    xi = np.array(xi)
    assert qn(dilate(H1, s, xi)) == pytest.approx(s * qn(xi), rel=1e-12, abs=1e-300)


@given(st.lists(finite, min_size=3, max_size=3), scales, scales)
def test_dilation_is_a_one_parameter_group(xi, s, t):
    lhs = dilate(H1, s, dilate(H1, t, xi))
    np.testing.assert_allclose(lhs, dilate(H1, s * t, xi), rtol=1e-12, atol=1e-300)


@given(st.lists(finite, min_size=4, max_size=4))
def test_quasi_norm_trivial_is_euclidean(xi):
    assert quasi_norm(QuasiNorm(Grading.trivial(4)), xi) == pytest.approx(np.linalg.norm(xi), rel=1e-14)


@pytest.mark.parametrize("d, expected", [(1, 2.0), (2, 2 * math.pi), (3, 4 * math.pi)])
def test_surface_area_examples(d, expected):
    assert surface_area(d) == pytest.approx(expected, rel=1e-15)


def test_surface_area_recurrence():
    # |S^(d+1)| = 2 pi |S^(d-1)| / d
    for d in range(1, 12):
        assert surface_area(d + 2) == pytest.approx(2 * math.pi * surface_area(d) / d, rel=1e-13)


@pytest.mark.parametrize("d", [0, -1, 2.5])
def test_surface_area_rejects(d):
    with pytest.raises(ValueError):
        surface_area(d)


def test_sphere_rule_s0():
    rule = sphere_quadrature(1, 7)
    assert sorted(rule.nodes[:, 0].tolist()) == [-1.0, 1.0]
    np.testing.assert_array_equal(rule.weights, [1.0, 1.0])


def test_sphere_rule_examples():
    r2 = sphere_quadrature(2, 4)
    assert r2.integrate(r2.nodes[:, 0] ** 2) == pytest.approx(math.pi, rel=1e-14)
    r3 = sphere_quadrature(3, 4)
    assert r3.integrate(np.ones(len(r3))) == pytest.approx(4 * math.pi, rel=1e-14)


@pytest.mark.parametrize("d, degree", [(2, 9), (3, 8), (4, 6), (5, 5)])
def test_sphere_rule_exact_on_monomials(d, degree):
    rule = sphere_quadrature(d, degree)
    for alpha in itertools.product(range(degree + 1), repeat=d):
        if sum(alpha) > degree:
            continue
        got = rule.integrate(np.prod(rule.nodes ** np.array(alpha), axis=1))
        assert got == pytest.approx(monomial_moment(alpha), abs=1e-12), alpha


def test_sphere_rule_nodes_on_sphere():
    rule = sphere_quadrature(4, 6)
    np.testing.assert_allclose(np.linalg.norm(rule.nodes, axis=1), 1.0, rtol=1e-14)
    assert not rule.nodes.flags.writeable


def test_sphere_rule_resource_bound():
    with pytest.raises(ValueError, match="limit"):
        sphere_quadrature(8, 200)
    assert MAX_SPHERE_NODES > 0
    with pytest.raises(ValueError):
        sphere_quadrature(3, -1)


def test_euler_density_integrates_to_weighted_volume():
    # int sum w_i w_i^2 dsigma = d_H |S^(d-1)| / d
    rule = sphere_quadrature(3, 8)
    got = rule.integrate(euler_density(H1, rule.nodes))
    assert got == pytest.approx(H1.d_H * 4 * math.pi / 3, rel=1e-14)
    np.testing.assert_allclose(euler_density(Grading.trivial(3), rule.nodes), 1.0, rtol=1e-15)
