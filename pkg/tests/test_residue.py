import math

import numpy as np
import pytest

import oracles
from ncresidue import ConvergenceError, DomainError, Grading, MissingTermError, SupportOverflowError, sphere_quadrature
from ncresidue.catalog import build_operator, unit_bump_mass
from ncresidue.residue import (
    OperatorModel,
    cocycle_at_zero,
    cocycle_homomorphism_check,
    global_residue,
    groupoidal_residue_at,
    ponge_groupoidal_equiv,
    ponge_residue_at,
    representative_invariance_check,
    residue_report,
    wodzicki_residue_at,
)
from ncresidue.symbols import HomogeneousTerm, KernelExpansion, PseudoHomogeneousTerm

H1 = Grading.heisenberg(1)
T1, T2 = Grading.trivial(1), Grading.trivial(2)
X2 = np.array([0.2, -0.3])


def shifted_log_kernel(grading, center):
    """log|v| p0(x) with p0 a unit-mass bump centred at ``center`` (independent of the catalog)."""
    mass = unit_bump_mass(grading.dim)
    c = np.asarray(center, dtype=float)

    def p0(x, z):
        t = float(np.sum((np.asarray(x) - c) ** 2))
        val = math.exp(1 - 1 / (1 - t)) / mass if t < 1 else 0.0
        return np.full(np.shape(z)[:-1], val)

    term = PseudoHomogeneousTerm(grading, 0, None, HomogeneousTerm(grading, 0, p0))
    return OperatorModel(grading, -grading.d_H, kernel=KernelExpansion.for_order(grading, -grading.d_H, [term]))


def staircase_model(grading):
    # K(v) = floor(log2|v| + 1/2): F_s(0) exists for every s but is not proportional to log s
    fiber = lambda x, v: np.floor(np.log2(np.linalg.norm(v, axis=-1)) + 0.5).astype(complex)
    return OperatorModel(grading, -grading.d_H, fiber=fiber, name="staircase")


def test_wodzicki_log_kernel():
    P = build_operator("log_kernel(p0=2.5)", T2)
    assert wodzicki_residue_at(P, X2).real == pytest.approx(-2.5, abs=1e-6)


@pytest.mark.parametrize("profile", ["odd", "even", "mixed"])
def test_wodzicki_homog0_vanishes(profile):
    assert abs(wodzicki_residue_at(build_operator(f"homog0({profile})", T2), X2)) < 1e-6


def test_wodzicki_norm_power_symbol():
    P = build_operator("norm_power(-2)", T2)
    assert wodzicki_residue_at(P, X2).real == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    assert wodzicki_residue_at(build_operator("norm_power(-3)", T2), X2) == 0


def test_wodzicki_missing_data():
    term = PseudoHomogeneousTerm(T2, -1, HomogeneousTerm(T2, -1, lambda x, z: 1 / np.linalg.norm(z, axis=-1)))
    P = OperatorModel(T2, -1, kernel=KernelExpansion.for_order(T2, -1, [term]))
    with pytest.raises(MissingTermError):
        wodzicki_residue_at(P, X2)
    with pytest.raises(DomainError):
        wodzicki_residue_at(build_operator("graded_norm_power(-4)", H1), np.zeros(3))


def test_wodzicki_error_estimate():
    value, err = wodzicki_residue_at(build_operator("log_kernel", T2), X2, with_error=True)
    assert abs(value + 1) <= max(err, 1e-12) + 1e-9
    assert err < 1e-5


def test_groupoidal_log_kernel_every_s():
    P = build_operator("log_kernel(p0=wave)", T2)
    res = groupoidal_residue_at(P, X2)
    want = -(1 + 0.5 * math.cos(X2.sum()))
    assert res.value.real == pytest.approx(want, abs=1e-10)
    for v in res.per_s.values():
        assert v.real == pytest.approx(want, abs=1e-10)
    assert res.accepted and not res.short_circuit


def test_groupoidal_homog0_vanishes():
    res = groupoidal_residue_at(build_operator("homog0(mixed)", Grading.trivial(3)), np.zeros(3))
    assert abs(res.value) < 1e-10


@pytest.mark.parametrize("expr", ["norm_power(-3)", "bessel_potential(-3)", "gaussian"])
def test_groupoidal_below_critical_order_is_zero(expr):
    res = groupoidal_residue_at(build_operator(expr, T2), X2)
    assert res.short_circuit and res.value == 0
    assert abs(res.numeric_value) < 1e-8 and res.accepted


def test_groupoidal_flags_s_spread():
    res = groupoidal_residue_at(staircase_model(T2), X2)
    assert not res.accepted and res.spread > 0.1
    rep = residue_report(staircase_model(T2), X2)
    assert not rep.ok and any("spread" in f for f in rep.failures)


def test_cocycle_extrapolation_failure():
    fiber = lambda x, v: np.sin(40 * np.log(np.linalg.norm(v, axis=-1))).astype(complex)
    P = OperatorModel(T2, -2, fiber=fiber)
    with pytest.raises(ConvergenceError, match="extrapolation"):
        cocycle_at_zero(P, X2, 2.0)
    with pytest.raises(ValueError):
        cocycle_at_zero(P, X2, 1.0)


def test_ponge_graded_norm_power():
    P = build_operator("graded_norm_power(-4)", H1)
    assert ponge_residue_at(P, np.zeros(3)).real == pytest.approx(oracles.PONGE_H1_EULER, rel=1e-9)
    plain = ponge_residue_at(P, np.zeros(3), measure="euclidean")
    assert plain.real == pytest.approx(oracles.PONGE_H1_EUCLIDEAN, rel=1e-9)
    with pytest.raises(ValueError):
        ponge_residue_at(P, np.zeros(3), measure="other")


def test_ponge_parity_and_linearity():
    x = np.zeros(3)
    assert abs(ponge_residue_at(build_operator("graded_odd(-4)", H1), x)) < 1e-15
    P = build_operator("graded_norm_power(-4)", H1)
    assert ponge_residue_at(P.scaled(-3.5), x) == pytest.approx(-3.5 * ponge_residue_at(P, x), rel=1e-14)


def test_ponge_missing_symbol():
    P = OperatorModel(H1, -4, fiber=lambda x, v: np.zeros(np.shape(v)[:-1], dtype=complex))
    with pytest.raises(MissingTermError):
        ponge_residue_at(P, np.zeros(3))


@pytest.mark.parametrize("expr", ["graded_norm_power(-4)", "graded_odd(-4)", "graded_norm_power(-4) + graded_odd(-4)"])
def test_ponge_groupoidal_equivalence(expr):
    rep = ponge_groupoidal_equiv(build_operator(expr, H1), np.zeros(3))
    assert rep.agree and rep.certified
    assert rep.relative_delta <= 1e-3


def test_certification_reported_separately():
    # a degree-2 sphere rule mis-estimates c0: certification fails, the comparison is still reported
    rep = ponge_groupoidal_equiv(build_operator("graded_norm_power(-4)", H1), np.zeros(3),
                                 s_set=(2.0,), rule=sphere_quadrature(3, 2))
    assert not rep.certified
    assert rep.relative_delta > 0 and isinstance(rep.agree, bool)


def test_global_residue_of_bump_density():
    P = build_operator("log_kernel(p0=bump)", T1)
    assert global_residue(P, [1.25], 101).real == pytest.approx(-1.0, abs=1e-6)
    assert global_residue(build_operator("log_kernel(p0=0)", T1), [1.0], 11) == 0


def test_global_residue_additive_over_disjoint_supports():
    P, Q = shifted_log_kernel(T1, [-1.5]), shifted_log_kernel(T1, [1.5])
    box, n = [3.0], 241
    a, b = global_residue(P, box, n), global_residue(Q, box, n)
    assert global_residue(P + Q, box, n) == pytest.approx(a + b, abs=1e-12)
    assert a.real == pytest.approx(-1.0, abs=1e-6)


def test_global_residue_overflow_and_method():
    with pytest.raises(SupportOverflowError):
        global_residue(build_operator("log_kernel", T1), [1.0], 5)
    P = build_operator("log_kernel(p0=bump)", T1)
    g = global_residue(P, [1.25], 41, method="groupoidal")
    assert g == pytest.approx(global_residue(P, [1.25], 41), abs=1e-8)
    with pytest.raises(ValueError):
        global_residue(P, [1.25], 41, method="fourier")


def test_representative_invariance():
    P = build_operator("log_kernel(p0=wave)", T2)
    bump = lambda v: np.exp(-np.sum((v - 0.1) ** 2, axis=-1) / 0.3)
    assert representative_invariance_check(P, X2, bump) <= 1e-6
    assert representative_invariance_check(P, X2, lambda v: 0 * v[..., 0]) == 0.0
    assert representative_invariance_check(P, X2, lambda v: 10 * bump(v)) <= 1e-6


def test_cocycle_homomorphism():
    P = build_operator("log_kernel(p0=wave)", T2)
    F2 = cocycle_at_zero(P, X2, 2.0).limit
    F4 = cocycle_at_zero(P, X2, 4.0).limit
    assert F4 == pytest.approx(2 * F2, rel=1e-12)
    assert cocycle_homomorphism_check(P, X2, 2.0, 0.5) < 1e-12
    rng = np.random.default_rng(3)
    for s, t in rng.uniform(0.25, 4, (5, 2)):
        Fs = cocycle_at_zero(P, X2, s).limit
        assert cocycle_homomorphism_check(P, X2, s, t) <= 1e-8 * (1 + abs(Fs))


def test_residues_linear_in_the_model():
    P = build_operator("log_kernel(p0=wave)", T2)
    Q = build_operator("homog0(mixed) + norm_power(-2)", T2)
    combo = P.scaled(2.0) + Q.scaled(-0.5)
    for method in (wodzicki_residue_at, lambda M, x: groupoidal_residue_at(M, x).value):
        assert method(combo, X2) == pytest.approx(2 * method(P, X2) - 0.5 * method(Q, X2), abs=1e-9)


def test_residue_report_methods():
    rep = residue_report(build_operator("log_kernel", T2), np.zeros(2))
    assert rep.ok and rep.agreement == {"wodzicki=groupoidal": True}
    assert rep.wodzicki.real == pytest.approx(-1, abs=1e-6)
    assert rep.groupoidal.value.real == pytest.approx(-1, abs=1e-10)
    rep = residue_report(build_operator("graded_norm_power(-4)", H1), np.zeros(3))
    assert rep.ok and rep.ponge is not None and rep.groupoidal is None


def test_operator_model_validation():
    with pytest.raises(ValueError):
        OperatorModel(T2, -2)
    with pytest.raises(ValueError):
        build_operator("log_kernel", T2) + build_operator("graded_norm_power(-4)", H1)
    P = OperatorModel(T2, -2, fiber=lambda x, v: np.zeros(np.shape(v)[:-1]))
    with pytest.raises(MissingTermError):
        P.symbol_values(X2, np.ones((1, 2)), -2)
