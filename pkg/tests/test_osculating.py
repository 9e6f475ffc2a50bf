import importlib

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from ncresidue import SupportOverflowError
from ncresidue import osculating
from ncresidue.osculating import (
    GridFunction,
    OsculatingGroup,
    commutator_at_identity,
    convolve,
    convolve_at,
    group_law,
    inverse,
    trace_engine,
)

H1 = OsculatingGroup.heisenberg(1)
A2 = OsculatingGroup.abelian(2)
coords = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3)


def gauss(center, width):
    c = np.asarray(center, dtype=float)
    return lambda p: np.exp(-np.sum((p - c) ** 2, axis=-1) / width**2)


def _backends():
    out = [importlib.import_module("ncresidue._kernels_py")]
    try:
        out.append(importlib.import_module("ncresidue._kernels"))
    except ImportError:  # pragma: no cover - extension not built
        pass
    return out


@pytest.fixture(params=_backends(), ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def backend(request, monkeypatch):
    monkeypatch.setattr(osculating, "_backend", request.param)
    return request.param


def test_group_law_examples():
    np.testing.assert_allclose(group_law(A2, [1, 2], [3, 4]), [4, 6])
    np.testing.assert_allclose(group_law(H1, [0, 1, 0], [0, 0, 1]), [0.5, 1, 1])
    g = np.array([0.3, -1.0, 2.0])
    np.testing.assert_allclose(group_law(H1, g, inverse(H1, g)), H1.identity)
    with pytest.raises(ValueError):
        group_law(H1, [1, 2], [3, 4])


@given(coords, coords)
def test_group_law_matches_hand_formula(g, h):
    np.testing.assert_allclose(H1.law(g, h), oracles.heisenberg_product(g, h), rtol=1e-13, atol=1e-12)


@given(coords, coords, coords)
def test_group_law_associative(a, b, c):
    lhs = H1.law(H1.law(a, b), c)
    rhs = H1.law(a, H1.law(b, c))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-10)


@given(coords, coords, st.floats(0.1, 10))
def test_dilations_are_automorphisms(a, b, s):
    lhs = H1.dilate(s, H1.law(a, b))
    rhs = H1.law(H1.dilate(s, a), H1.dilate(s, b))
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-9)


def test_grid_function_basics():
    f = GridFunction.sample(gauss([0, 0], 0.5), (4.0, 4.0), 81)
    assert f.integral().real == pytest.approx(np.pi * 0.25, rel=1e-12)
    np.testing.assert_allclose(f.origin, [-4, -4])
    assert f(np.array([[0.1, -0.2]]))[0].real == pytest.approx(np.exp(-0.05 / 0.25), rel=1e-2)
    assert f(np.array([[9.0, 0.0]]))[0] == 0
    assert (f + f).integral() == pytest.approx(2 * f.integral())
    assert (f - f).integral() == 0
    assert f.scaled(2j).integral() == pytest.approx(2j * f.integral())


def test_sample_reports_support_overflow():
    with pytest.raises(SupportOverflowError):
        GridFunction.sample(gauss([0, 0], 2.0), (3.0, 3.0), 32)


def test_mismatched_grids_rejected():
    f = GridFunction.sample(gauss([0, 0], 0.5), (4.0, 4.0), 32)
    g = GridFunction.sample(gauss([0, 0], 0.5), (4.0, 4.0), 16)
    with pytest.raises(ValueError):
        f + g
    with pytest.raises(ValueError):
        convolve_at(H1, f, g, [[0, 0, 0]])


def test_heisenberg_convolution_matches_closed_form(backend):
    a, b = np.array([0.2, -0.1, 0.3]), np.array([-0.4, 0.25, 0.1])
    f = GridFunction.sample(gauss(a, 0.5), (4, 4, 4), 48)
    g = GridFunction.sample(gauss(b, 0.5), (4, 4, 4), 48)
    got = convolve_at(H1, f, g, H1.identity[None])[0]
    assert got.real == pytest.approx(oracles.gaussian_convolution_at_identity(a, b, 0.25), rel=1e-8)


def test_heisenberg_convolution_matches_dense_sum_off_identity(backend):
    # off e the point y^-1 x leaves the grid of g; multilinear interpolation makes the rule second order
    fa, gb = gauss([0.2, 0.0, 0.1], 0.6), gauss([0.0, -0.3, 0.2], 0.6)
    x = np.array([0.3, 0.5, -0.4])
    want = oracles.dense_convolution(fa, gb, x, 4.0, 40, oracles.heisenberg_product)
    errs = []
    for n in (33, 65):
        f = GridFunction.sample(fa, (4, 4, 4), n)
        g = GridFunction.sample(gb, (4, 4, 4), n)
        errs.append(abs(convolve_at(H1, f, g, x[None])[0] - want))
    assert errs[1] < 3e-3 * want
    assert errs[0] / errs[1] > 3.5


def test_noncommutativity_visible_off_identity(backend):
    f = GridFunction.sample(gauss([0.5, 0.5, 0.0], 0.5), (4, 4, 4), 48)
    g = GridFunction.sample(gauss([0.0, 0.0, 0.5], 0.5), (4, 4, 4), 48)
    x = np.array([[0.0, 0.8, -0.6]])
    fg, gf = convolve_at(H1, f, g, x)[0], convolve_at(H1, g, f, x)[0]
    assert abs(fg - gf) > 1e-3 * abs(fg)
    assert abs(commutator_at_identity(H1, f, g)) < 1e-12


def test_abelian_convolution_commutes_and_matches_dense_sum(backend):
    fa, gb = gauss([0.3, -0.2], 0.4), gauss([-0.1, 0.4], 0.5)
    # spacing 1/12, evaluation points on nodes so that x - y stays on the grid
    f = GridFunction.sample(fa, (4, 4), 97)
    g = GridFunction.sample(gb, (4, 4), 97)
    xs = np.array([[0.0, 0.0], [0.5, -0.25], [-0.75, 1.0]])
    fg, gf = convolve_at(A2, f, g, xs), convolve_at(A2, g, f, xs)
    np.testing.assert_allclose(fg, gf, rtol=1e-12, atol=1e-15)
    law = lambda u, v: u + v
    want = [oracles.dense_convolution(fa, gb, x, 4.0, 200, law) for x in xs]
    np.testing.assert_allclose(fg.real, want, rtol=1e-6)


def test_approximate_identity(backend):
    w = 0.05
    delta = GridFunction.sample(lambda p: np.exp(-np.sum(p * p, axis=-1) / w**2) / (np.pi * w**2), (5, 5), 401)
    smooth = gauss([0.2, 0.1], 0.7)
    g = GridFunction.sample(smooth, (5, 5), 401)
    xs = np.array([[0.0, 0.0], [0.4, -0.3], [-0.5, 0.6]])
    got = convolve_at(A2, delta, g, xs).real
    np.testing.assert_allclose(got, smooth(xs), atol=5 * w**2)


def test_backends_agree():
    py = importlib.import_module("ncresidue._kernels_py")
    backends = _backends()
    if len(backends) < 2:
        pytest.skip("compiled kernel not available")
    f = GridFunction.sample(gauss([0.1, 0.2, -0.1], 0.5), (4, 4, 4), 24)
    g = GridFunction.sample(gauss([-0.2, 0.0, 0.3], 0.5), (4, 4, 4), 24)
    xs = np.random.default_rng(0).uniform(-1, 1, (7, 3))
    out = []
    for mod in backends:
        osculating._backend = mod
        out.append(convolve_at(H1, f, g, xs))
    osculating._backend = backends[-1]
    np.testing.assert_allclose(out[0], out[1], rtol=1e-13, atol=1e-16)
    assert py in backends


def test_threads_give_same_answer():
    f = GridFunction.sample(gauss([0.1, 0.2, -0.1], 0.5), (4, 4, 4), 20)
    g = GridFunction.sample(gauss([-0.2, 0.0, 0.3], 0.5), (4, 4, 4), 20)
    xs = np.random.default_rng(1).uniform(-1, 1, (16, 3))
    np.testing.assert_allclose(convolve_at(H1, f, g, xs, threads=4), convolve_at(H1, f, g, xs), rtol=1e-14)


def test_convolve_grid_and_overflow(backend):
    f = GridFunction.sample(gauss([0, 0], 0.3), (3, 3), 61)
    g = GridFunction.sample(gauss([0, 0], 0.3), (3, 3), 61)
    out = convolve(A2, f, g, out_resolution=41)
    # Gaussian * Gaussian: (pi w^2/2) exp(-|x|^2/(2 w^2))
    x = np.zeros((1, 2))
    assert out(x)[0].real == pytest.approx(np.pi * 0.09 / 2, rel=1e-6)
    with pytest.raises(SupportOverflowError):
        convolve(A2, f, g, out_half_widths=(1.0, 1.0))


def test_trace_engine(backend):
    rng = np.random.default_rng(7)
    fs = [GridFunction.sample(gauss(c, 0.5), (4, 4, 4), 40) for c in rng.uniform(-0.5, 0.5, (4, 3))]
    assert abs(trace_engine(H1, *fs)) < 1e-12
    zero = fs[0].scaled(0.0)
    assert trace_engine(H1, fs[0], fs[1], zero, zero) == 0
    fa = [GridFunction.sample(gauss(c, 0.4), (3, 3), 40) for c in rng.uniform(-0.5, 0.5, (4, 2))]
    assert abs(trace_engine(A2, *fa)) < 1e-14


def test_backend_selection_env(monkeypatch):
    monkeypatch.setenv("NCRESIDUE_PURE_PYTHON", "1")
    mod = importlib.reload(osculating)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("NCRESIDUE_PURE_PYTHON")
        importlib.reload(osculating)
