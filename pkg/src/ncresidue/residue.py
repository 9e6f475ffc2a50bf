"""Residues of model operators: Wodzicki, Ponge and groupoidal, and their comparisons.

The groupoidal residue is read off the zoom cocycle on the t=0 fibre,

    F_s(v) = K(x, delta_(1/s) v) - K(x, v),     Res_x = F_s(0) / log(s),

where ``K`` is the fibre kernel (for catalog models ``chi(v) k(x, v)``).  The
limit ``v -> 0`` is taken along ``v = delta_r(e)``, ``r = 2^-k``, by Richardson
extrapolation in ``r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, MissingTermError, SupportOverflowError
from .graded import Grading, SphereRule, dilate, euler_density, sphere_quadrature
from .homog_dist import ExtendedHomogeneousDistribution, TestFunction, bump, c0, dilation_cocycle
from .symbols import CutoffFunction, KernelExpansion, PolySymbol, kernel_term_to_symbol_term

__all__ = [
    "OperatorModel",
    "CocycleSample",
    "GroupoidalResult",
    "EquivalenceReport",
    "ResidueReport",
    "DEFAULT_S_SET",
    "DEFAULT_LEVELS",
    "wodzicki_residue_at",
    "groupoidal_residue_at",
    "cocycle_at_zero",
    "ponge_residue_at",
    "ponge_groupoidal_equiv",
    "global_residue",
    "representative_invariance_check",
    "cocycle_homomorphism_check",
    "residue_report",
]

DEFAULT_S_SET = (1.0 / 3.0, 0.5, 2.0, 3.0)
#: exponents k of the radii r = 2^-k along which F_s(delta_r e) is sampled
DEFAULT_LEVELS = tuple(range(8, 21))
#: largest accepted Richardson error relative to max |F_s| along the sequence
EXTRAPOLATION_RTOL = 1e-6


@dataclass(frozen=True)
class OperatorModel:
    """Symbol and/or kernel data of an operator of declared order ``m``.

    ``fiber`` overrides the fibre kernel ``K(x, v)``; otherwise it is
    ``cutoff(v) * kernel(x, v)``.  Linear combinations are kept as
    ``components`` so that each part contributes through its own data.
    """

    grading: Grading
    order: int
    symbol: PolySymbol | None = None
    kernel: KernelExpansion | None = None
    fiber: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    cutoff: CutoffFunction = field(default_factory=CutoffFunction)
    name: str = ""
    components: tuple = ()

    def __post_init__(self):
        if not self.components and self.symbol is None and self.kernel is None and self.fiber is None:
            raise ValueError("an operator model needs symbol, kernel or fibre data")
        if self.kernel is not None and self.kernel.leading_degree < -self.order - self.grading.d_H:
            raise ValueError(
                f"kernel leading degree {self.kernel.leading_degree} inconsistent with order {self.order}"
            )
        if self.symbol is not None and self.symbol.order > self.order:
            raise ValueError(f"symbol order {self.symbol.order} exceeds declared order {self.order}")

    @property
    def critical(self) -> bool:
        return self.order == -self.grading.d_H

    def __add__(self, other: "OperatorModel") -> "OperatorModel":
        if other.grading != self.grading:
            raise ValueError("operator models live on different gradings")
        parts = self._parts() + other._parts()
        return OperatorModel(self.grading, max(self.order, other.order), cutoff=self.cutoff,
                             name=f"{self.name} + {other.name}", components=parts)

    def scaled(self, c: complex) -> "OperatorModel":
        parts = tuple((c * a, m) for a, m in self._parts())
        return OperatorModel(self.grading, self.order, cutoff=self.cutoff, name=f"{c:g}*({self.name})",
                             components=parts)

    def _parts(self) -> tuple:
        return self.components if self.components else ((1.0, self),)

    def fiber_kernel(self, x, v) -> np.ndarray:
        """Fibre kernel ``K(x, v)`` for ``v != 0``."""
        v = np.asarray(v, dtype=float)
        if self.components:
            return sum(a * m.fiber_kernel(x, v) for a, m in self.components)
        if self.fiber is not None:
            return np.asarray(self.fiber(np.asarray(x, dtype=float), v), dtype=complex)
        if self.kernel is not None:
            return self.cutoff(v) * self.kernel(x, v)
        raise MissingTermError(f"{self.name}: no kernel data for the groupoidal residue")

    def has_fiber(self) -> bool:
        if self.components:
            return all(m.has_fiber() for _, m in self.components)
        return self.fiber is not None or self.kernel is not None

    def symbol_values(self, x, xi: np.ndarray, degree: int) -> tuple[np.ndarray, float]:
        """Degree-``degree`` homogeneous symbol at the rows of ``xi`` with an error bound.

        Uses the symbol expansion when present, otherwise the Fourier
        correspondence applied to the matching kernel term.
        """
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        if self.components:
            total = np.zeros(len(xi), dtype=complex)
            err = 0.0
            for a, m in self.components:
                vals, e = m.symbol_values(x, xi, degree)
                total += a * vals
                err += abs(a) * e
            return total, err
        if self.symbol is not None:
            term = self.symbol.term(degree)
            if term is None:
                return np.zeros(len(xi), dtype=complex), 0.0
            return np.asarray(term(x, xi), dtype=complex), 0.0
        if self.kernel is not None:
            kdeg = -degree - self.grading.d_H
            term = self.kernel.term(kdeg)
            if term is None:
                if kdeg < self.kernel.leading_degree:
                    return np.zeros(len(xi), dtype=complex), 0.0
                raise MissingTermError(f"{self.name}: kernel expansion stops before degree {kdeg}")
            if not self.grading.is_trivial:
                raise MissingTermError(f"{self.name}: no graded Fourier correspondence for kernel data")
            ests = [kernel_term_to_symbol_term(term, x, self.cutoff, xi=row) for row in xi]
            return np.array([e.value for e in ests]), max(e.error for e in ests)
        raise MissingTermError(f"{self.name}: no symbol or kernel term of degree {degree}")


@dataclass(frozen=True)
class CocycleSample:
    """``F_s`` along ``v = delta_r(e)`` and its extrapolation to ``v = 0``."""

    s: float
    radii: tuple[float, ...]
    values: tuple[complex, ...]
    limit: complex
    error: float
    error_history: tuple[float, ...] = ()


@dataclass(frozen=True)
class GroupoidalResult:
    value: complex
    per_s: dict
    spread: float
    samples: tuple[CocycleSample, ...]
    accepted: bool
    tolerance: float
    numeric_value: complex | None = None
    short_circuit: bool = False

    def __complex__(self) -> complex:
        return complex(self.value)


@dataclass(frozen=True)
class EquivalenceReport:
    ponge: complex
    groupoidal: complex
    per_s_c0: dict
    certified: bool
    certification_deltas: dict
    agree: bool
    relative_delta: float
    tolerance: float


@dataclass
class ResidueReport:
    x: tuple[float, ...]
    operator: str
    wodzicki: complex | None = None
    wodzicki_error: float | None = None
    ponge: complex | None = None
    groupoidal: GroupoidalResult | None = None
    equivalence: EquivalenceReport | None = None
    agreement: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and all(self.agreement.values())


def wodzicki_residue_at(P: OperatorModel, x, rule: SphereRule | None = None, with_error: bool = False):
    """``(2 pi)^-d int_(S^(d-1)) a_(-d)(x, xi) dsigma(xi)`` (trivial gradings)."""
    if not P.grading.is_trivial:
        raise DomainError("the Wodzicki residue needs a trivial grading; use ponge_residue_at")
    d = P.grading.dim
    rule = rule or sphere_quadrature(d, 4)
    vals, err = P.symbol_values(x, rule.nodes, -d)
    scale = (2.0 * math.pi) ** (-d)
    value = complex(scale * rule.integrate(vals))
    if with_error:
        return value, scale * float(np.sum(rule.weights)) * err
    return value


def _direction(grading: Grading, e=None) -> np.ndarray:
    if e is None:
        e = np.linspace(1.0, 0.5, grading.dim)
    e = np.asarray(e, dtype=float)
    return e / np.linalg.norm(e)


def _richardson(values: np.ndarray, ratio: float = 2.0, max_order: int = 4):
    """Extrapolate ``values[k] ~ L + sum_j c_j h_k^j`` with ``h_(k+1) = h_k / ratio`` to h=0.

    Returns ``(limit, error, history)`` where ``history`` lists the error
    estimates of the successive diagonal entries.
    """
    n = len(values)
    table = [np.asarray(values, dtype=complex)]
    for j in range(1, min(max_order, n - 1) + 1):
        prev = table[-1]
        f = ratio**j
        table.append((f * prev[1:] - prev[:-1]) / (f - 1.0))
    # best estimate: highest order using the smallest radii; error from the order below
    best = table[-1][-1]
    history = [float(abs(table[j][-1] - table[j - 1][-1])) for j in range(1, len(table))]
    error = history[-1] if history else float("nan")
    return complex(best), error, tuple(history)


def cocycle_at_zero(P: OperatorModel, x, s: float, levels: Sequence[int] = DEFAULT_LEVELS, e=None,
                    fiber: Callable | None = None) -> CocycleSample:
    """Extrapolated ``F_s(0)`` from ``F_s(delta_r e)``, ``r = 2^-k`` for ``k`` in ``levels``."""
    if not s > 0 or s == 1:
        raise ValueError(f"s must be positive and != 1, got {s}")
    g = P.grading
    e = _direction(g, e)
    K = fiber or P.fiber_kernel
    radii = np.array([2.0 ** (-k) for k in levels])
    v = np.array([dilate(g, r, e) for r in radii])
    vs = np.array([dilate(g, 1.0 / s, p) for p in v])
    F = np.asarray(K(x, vs) - K(x, v), dtype=complex)
    if not np.all(np.isfinite(F)):
        raise ConvergenceError(f"fibre kernel not finite along the zoom sequence (s={s})")
    limit, error, history = _richardson(F[-6:])
    floor = 1e-12 * max(1.0, float(np.max(np.abs(F))))
    if len(history) >= 2 and history[-1] > max(history[0], floor):
        raise ConvergenceError(f"cocycle extrapolation diverges at s={s}: error history {history}")
    # smooth models extrapolate to ~1e-13 relative; an O(1) error means F_s(v) has no limit
    if error > EXTRAPOLATION_RTOL * max(1.0, float(np.max(np.abs(F)))):
        raise ConvergenceError(f"cocycle extrapolation did not settle at s={s}: error {error:.3e}")
    return CocycleSample(float(s), tuple(radii), tuple(complex(f) for f in F), limit, error, history)


def groupoidal_residue_at(P: OperatorModel, x, s_set: Sequence[float] = DEFAULT_S_SET,
                          levels: Sequence[int] = DEFAULT_LEVELS, tol: float = 1e-6, e=None,
                          fiber: Callable | None = None) -> GroupoidalResult:
    """Residue ``F_s(0)/log s`` for each ``s``, combined by an error-weighted mean.

    Operators of order below ``-d_H`` have continuous kernels; their residue
    is 0 by that argument, and the numerical cocycle is still evaluated and
    reported as ``numeric_value``.
    """
    samples = [cocycle_at_zero(P, x, s, levels, e, fiber) for s in s_set]
    per_s = {s.s: s.limit / math.log(s.s) for s in samples}
    errs = np.array([max(sm.error / abs(math.log(sm.s)), 1e-16) for sm in samples])
    vals = np.array(list(per_s.values()))
    w = 1.0 / errs**2
    value = complex(np.sum(w * vals) / np.sum(w))
    spread = float(np.max(np.abs(vals - value))) if len(vals) else 0.0
    short = P.order < -P.grading.d_H
    accepted = spread <= tol * (1.0 + abs(value))
    if short:
        return GroupoidalResult(0j, per_s, spread, tuple(samples), accepted and abs(value) <= tol, tol,
                                numeric_value=value, short_circuit=True)
    return GroupoidalResult(value, per_s, spread, tuple(samples), accepted, tol, numeric_value=value)


def ponge_residue_at(P: OperatorModel, x, rule: SphereRule | None = None, measure: str = "euler") -> complex:
    """``(2 pi)^-(d+1) int_(S^d) p_(-d_H)(x, xi)`` over the Euclidean unit sphere of R^(d+1).

    With ``measure="euler"`` the sphere measure is contracted with the Euler
    field, ``sum_i w_i xi_i^2 dsigma``; ``"euclidean"`` uses plain ``dsigma``.
    ``|d Psi_x| = 1`` in model coordinates.
    """
    g = P.grading
    dim = g.dim
    rule = rule or sphere_quadrature(dim, 60 if dim <= 3 else 16)
    try:
        vals, _ = P.symbol_values(x, rule.nodes, -g.d_H)
    except MissingTermError as exc:
        raise MissingTermError(f"{P.name}: missing symbol of degree {-g.d_H}") from exc
    if measure == "euler":
        vals = vals * euler_density(g, rule.nodes)
    elif measure != "euclidean":
        raise ValueError(f"unknown measure {measure!r}")
    return complex(rule.integrate(vals) / (2.0 * math.pi) ** dim)


def ponge_groupoidal_equiv(P: OperatorModel, x, s_set: Sequence[float] = DEFAULT_S_SET,
                           phi: TestFunction | None = None, rule: SphereRule | None = None,
                           tol: float = 1e-3, cert_tol: float = 1e-4) -> EquivalenceReport:
    """Groupoidal residue from the symbol-side dilation cocycle versus the Ponge residue.

    For each ``s`` the cocycle ``D_s`` of the canonical extension of
    ``u = p_(-d_H)(x, .)`` gives ``c0 = s^d_H D_s / (log(s) phi(0))``; the
    groupoidal residue is ``(2 pi)^-(d+1)`` times the mean of these.  The
    certification compares each ``D_s`` with ``s^-d_H log(s) c0(u) phi(0)``
    computed by sphere quadrature.
    """
    g = P.grading
    dim, dh = g.dim, g.d_H
    rule = rule or sphere_quadrature(dim, 60 if dim <= 3 else 16)
    phi = phi or bump(1.0)
    x_arr = np.asarray(x, dtype=float)

    def u(v):
        vals, _ = P.symbol_values(x_arr, np.reshape(v, (-1, dim)), -dh)
        return vals.reshape(np.shape(v)[:-1])

    dist = ExtendedHomogeneousDistribution(g, u, -dh, P.name)
    c0_rule = c0(u, rule, g)
    per_s, deltas = {}, {}
    certified = True
    for s in s_set:
        D = dilation_cocycle(dist, s, phi)
        expected = s ** (-dh) * math.log(s) * c0_rule * phi.value_at_zero
        deltas[s] = abs(D - expected)
        if deltas[s] > cert_tol * (1.0 + abs(c0_rule * phi.value_at_zero)):
            certified = False
        per_s[s] = D * s**dh / (math.log(s) * phi.value_at_zero)
    groupoidal = complex(np.mean(list(per_s.values())) / (2.0 * math.pi) ** dim)
    ponge = ponge_residue_at(P, x, rule)
    # relative to the L1 size of the symbol on the sphere, so that vanishing residues compare sensibly
    size = abs(rule.integrate(np.abs(u(rule.nodes)) * euler_density(g, rule.nodes))) / (2.0 * math.pi) ** dim
    rel = abs(groupoidal - ponge) / max(abs(ponge), size, 1e-300)
    return EquivalenceReport(ponge, groupoidal, per_s, certified, deltas, rel <= tol, float(rel), tol)


def global_residue(P: OperatorModel, half_widths: Sequence[float], resolution: int,
                   rule: SphereRule | None = None, method: str = "wodzicki", edge_tol: float = 1e-12) -> complex:
    """Trapezoid integral of the residue density over the centred box.

    ``method`` selects the pointwise density (``"wodzicki"`` or
    ``"groupoidal"``).  The density must vanish on the box boundary.
    """
    g = P.grading
    axes = [np.linspace(-h, h, resolution) for h in half_widths]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, g.dim)
    if method == "wodzicki":
        dens = np.array([wodzicki_residue_at(P, p, rule) for p in pts])
    elif method == "groupoidal":
        dens = np.array([groupoidal_residue_at(P, p).value for p in pts])
    else:
        raise ValueError(f"unknown method {method!r}")
    dens = dens.reshape((resolution,) * g.dim)
    top = float(np.max(np.abs(dens))) if dens.size else 0.0
    for k in range(g.dim):
        for i in (0, -1):
            if np.max(np.abs(np.take(dens, i, axis=k))) > edge_tol * max(top, 1.0):
                raise SupportOverflowError("residue density does not vanish on the region boundary")
    w = np.ones(dens.shape)
    for k, ax in enumerate(axes):
        wk = np.full(len(ax), ax[1] - ax[0])
        wk[[0, -1]] *= 0.5
        w = w * wk.reshape([-1 if j == k else 1 for j in range(g.dim)])
    return complex(np.sum(w * dens))


def representative_invariance_check(P: OperatorModel, x, perturbation, s_set: Sequence[float] = DEFAULT_S_SET,
                                    levels: Sequence[int] = DEFAULT_LEVELS) -> float:
    """``|Res(K + h) - Res(K)|`` for a smooth perturbation ``h(v)`` of the fibre kernel.

    ``perturbation`` is a callable on ``(..., dim)`` points or any object with
    the same call signature (e.g. an osculating ``GridFunction``).
    """
    base = groupoidal_residue_at(P, x, s_set, levels)
    K = P.fiber_kernel
    pert = lambda xx, v: K(xx, v) + np.asarray(perturbation(v), dtype=complex)
    moved = groupoidal_residue_at(P, x, s_set, levels, fiber=pert)
    return float(abs(moved.numeric_value - base.numeric_value))


def cocycle_homomorphism_check(P: OperatorModel, x, s: float, t: float,
                               levels: Sequence[int] = DEFAULT_LEVELS) -> float:
    """``|F_st(0) - F_s(0) - F_t(0)|``; ``F_1 = 0`` by definition."""
    F = lambda a: 0j if a == 1 else cocycle_at_zero(P, x, a, levels).limit
    return float(abs(F(s * t) - F(s) - F(t)))


def residue_report(P: OperatorModel, x, s_set: Sequence[float] = DEFAULT_S_SET, tol: float = 1e-3,
                   rule: SphereRule | None = None) -> ResidueReport:
    """Run every residue method applicable to ``P`` at ``x`` and compare them."""
    x = np.asarray(x, dtype=float)
    rep = ResidueReport(tuple(float(v) for v in x), P.name)
    g = P.grading
    if P.has_fiber():
        try:
            rep.groupoidal = groupoidal_residue_at(P, x, s_set)
            if not rep.groupoidal.accepted:
                rep.failures.append(f"groupoidal s-spread {rep.groupoidal.spread:.3e} exceeds tolerance")
        except (ConvergenceError, MissingTermError) as exc:
            rep.failures.append(f"groupoidal: {exc}")
    if g.is_trivial:
        try:
            rep.wodzicki, rep.wodzicki_error = wodzicki_residue_at(P, x, rule, with_error=True)
        except (ConvergenceError, MissingTermError) as exc:
            rep.failures.append(f"wodzicki: {exc}")
        if rep.wodzicki is not None and rep.groupoidal is not None:
            delta = abs(rep.wodzicki - rep.groupoidal.value)
            rep.agreement["wodzicki=groupoidal"] = bool(delta <= tol * (1.0 + abs(rep.wodzicki)))
    else:
        try:
            rep.equivalence = ponge_groupoidal_equiv(P, x, s_set, rule=rule, tol=tol)
            rep.ponge = rep.equivalence.ponge
            rep.agreement["ponge=groupoidal"] = rep.equivalence.agree
            if not rep.equivalence.certified:
                rep.failures.append("dilation cocycle certification failed")
        except (ConvergenceError, MissingTermError) as exc:
            rep.failures.append(f"ponge: {exc}")
        if rep.ponge is not None and rep.groupoidal is not None:
            delta = abs(rep.ponge - rep.groupoidal.value)
            rep.agreement["ponge=kernel groupoidal"] = bool(delta <= tol * (1.0 + abs(rep.ponge)))
    return rep
