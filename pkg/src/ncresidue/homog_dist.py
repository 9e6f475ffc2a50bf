"""Homogeneous distributions of critical degree, their dilation cocycle, FT of log.

A function ``u`` homogeneous of degree ``-d_H`` is extended across the origin
by the canonical regularisation

    <u, phi> = int_{|v|<=1} u (phi - phi(0)) dv + int_{|v|>1} u phi dv

(quasi-norm ball).  Everything is computed in graded polar coordinates
``v = delta_r(omega)`` with ``omega`` on the Euclidean unit sphere, where
``dv = r^(d_H-1) dr * rho(omega) dsigma(omega)``.  The angular density
``rho`` is obtained from the derivative of the projection onto the quasi-sphere
and the quasi-norm gradient; for the trivial grading it is 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError
from .graded import Grading, QuasiNorm, SphereRule, euler_density, sphere_quadrature, surface_area
from .symbols import HomogeneousTerm, PseudoHomogeneousTerm, kernel_term_to_symbol_term

__all__ = [
    "ExtendedHomogeneousDistribution",
    "TestFunction",
    "AngularDecomposition",
    "bump",
    "angular_density",
    "pair",
    "dilation_cocycle",
    "cocycle_composition_defect",
    "c0",
    "ft_log",
    "grafakos_decompose",
]


@dataclass(frozen=True)
class ExtendedHomogeneousDistribution:
    """Canonical extension of ``u`` (homogeneous of ``degree``) across 0."""

    grading: Grading
    u: Callable[[np.ndarray], np.ndarray]
    degree: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.degree is None:
            object.__setattr__(self, "degree", -self.grading.d_H)
        if self.degree < -self.grading.d_H:
            raise DomainError(f"degree {self.degree} below -d_H needs higher-order subtractions")

    @classmethod
    def from_term(cls, term: HomogeneousTerm, x=None) -> "ExtendedHomogeneousDistribution":
        x = np.zeros(term.grading.dim) if x is None else np.asarray(x, dtype=float)
        return cls(term.grading, lambda v: term(x, v), term.degree, term.name)

    @property
    def critical(self) -> bool:
        return self.degree == -self.grading.d_H

    def __call__(self, v) -> np.ndarray:
        return np.asarray(self.u(np.asarray(v, dtype=float)))


@dataclass(frozen=True)
class TestFunction:
    """Smooth compactly supported ``func``; zero outside the Euclidean ball ``support_radius``."""

    func: Callable[[np.ndarray], np.ndarray]
    value_at_zero: complex
    support_radius: float
    name: str = ""

    __test__ = False  # not a pytest class

    def __call__(self, v) -> np.ndarray:
        return np.asarray(self.func(np.asarray(v, dtype=float)))

    def dilated(self, grading: Grading, s: float) -> "TestFunction":
        """``v -> phi(delta_(1/s) v)``."""
        if not s > 0:
            raise ValueError("dilation parameter must be positive")
        scale = np.power(1.0 / s, grading.weight_array)
        f = self.func
        grow = float(np.max(np.power(float(s), grading.weight_array)))
        return TestFunction(lambda v: f(np.asarray(v) * scale), self.value_at_zero,
                            self.support_radius * grow, f"{self.name}o d_1/{s:g}")

    def scaled(self, c: complex) -> "TestFunction":
        f = self.func
        return TestFunction(lambda v: c * f(v), c * self.value_at_zero, self.support_radius, self.name)

    def check_support(self, dim: int, sample_count: int = 500, seed: int = 0) -> float:
        """Largest sampled ``|phi|`` on the shell between 1 and 3 support radii."""
        rng = np.random.default_rng(seed)
        v = rng.standard_normal((sample_count, dim))
        v *= (self.support_radius * rng.uniform(1.0, 3.0, sample_count)
              / np.linalg.norm(v, axis=1))[:, None]
        return float(np.max(np.abs(self(v))))


def bump(radius: float = 1.0, center=None, amplitude: float = 1.0) -> TestFunction:
    """``amplitude * exp(1 - 1/(1 - |v-c|^2/radius^2))`` inside the ball, 0 outside."""
    c = None if center is None else np.asarray(center, dtype=float)

    def f(v):
        w = v if c is None else v - c
        t = np.sum(w * w, axis=-1) / radius**2
        out = np.zeros(t.shape)
        inside = t < 1.0
        out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - t[inside]))
        return out

    at0 = f(np.zeros((1, 1 if c is None else len(c))))[0] if c is not None else amplitude
    reach = radius + (0.0 if c is None else float(np.linalg.norm(c)))
    return TestFunction(f, float(at0), reach, f"bump({radius:g})")


@dataclass(frozen=True)
class AngularDecomposition:
    """``FT(f0) = b delta_0 + W_Omega`` with ``W_Omega = Omega(xi/|xi|)/|xi|^d`` off 0."""

    b: complex
    omega: Callable[[np.ndarray], np.ndarray]
    nodes: np.ndarray
    values: np.ndarray
    rule: SphereRule
    mean: complex
    b_error: float
    omega_error: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0


def angular_density(grading: Grading, omega) -> np.ndarray:
    """Density of ``dv`` against ``r^(d_H-1) dr dsigma(omega)`` for ``v = delta_r(omega)``.

    Computed as ``|D theta| / |grad q|(theta)`` where ``theta(omega) =
    delta_(1/q(omega)) omega`` projects onto the quasi-sphere; the Euler
    field satisfies ``E.grad q = q = 1`` there, which turns the surface
    measure of the quasi-sphere into the polar density.  Converted back to
    the Euclidean parametrisation this picks up ``q(omega)^d_H``.  The result
    equals ``sum_i w_i omega_i^2`` (see :func:`graded.euler_density`).
    """
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    d = grading.dim
    if d == 1:
        return np.ones(len(omega))
    w = grading.weight_array
    qn = QuasiNorm(grading)
    q = qn(omega)
    grad_q = _quasi_norm_gradient(qn, omega, q)
    inv = 1.0 / q
    theta = omega * np.power(inv[:, None], w)
    grad_theta_q = _quasi_norm_gradient(qn, theta, np.ones(len(theta)))
    # Householder reflections mapping e_0 to -sign(omega_0) omega; the other columns span the tangent space
    h = omega.copy()
    h[:, 0] += np.where(omega[:, 0] >= 0, 1.0, -1.0)
    frames = np.eye(d)[None] - 2.0 * h[:, :, None] * h[:, None, :] / np.sum(h * h, axis=1)[:, None, None]
    tangents = frames[:, :, 1:]  # (n, d, d-1)
    # d theta = delta_(1/q) d omega + (d/dr delta_r omega)|_(r=1/q) * (-dq / q^2)
    ddr = w * np.power(inv[:, None], w - 1.0) * omega  # (n, d)
    dq = np.einsum("nd,ndk->nk", grad_q, tangents)
    jac = np.power(inv[:, None, None], w[None, :, None]) * tangents - ddr[:, :, None] * (dq / q[:, None] ** 2)[:, None, :]
    gram = np.einsum("ndk,ndl->nkl", jac, jac)
    area = np.sqrt(np.linalg.det(gram))
    # v = delta_r theta = delta_(r/q) omega, so r^(d_H-1) dr gains q^d_H
    return area / np.linalg.norm(grad_theta_q, axis=1) * q ** grading.d_H


def _quasi_norm_gradient(qn: QuasiNorm, xi: np.ndarray, q: np.ndarray) -> np.ndarray:
    # d|xi|/dxi_i = |xi|^(1-2N) |xi_i|^(2N/w_i - 1) sign(xi_i) / w_i
    e = qn.exponents
    w = qn.grading.weight_array
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.power(np.abs(xi), e - 1.0) * np.sign(xi) / w * np.power(q[:, None], 1.0 - 2.0 * qn.N)
    return np.nan_to_num(g)


def _exit_radius(grading: Grading, omega: np.ndarray, radius: float) -> np.ndarray:
    """``rho`` with ``|delta_rho omega|_E = radius`` (vectorised bisection)."""
    w = grading.weight_array
    lo = np.zeros(len(omega))
    hi = np.full(len(omega), max(radius, 1.0))
    norm = lambda r: np.linalg.norm(omega * np.power(r[:, None], w), axis=1)
    while np.any(norm(hi) < radius):
        hi = np.where(norm(hi) < radius, 2.0 * hi, hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        below = norm(mid) < radius
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return hi


def _gauss_panels(n_panels: int, order: int):
    x, wx = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (b - a) * x + 0.5 * (b + a)).ravel(), (0.5 * (b - a) * wx).ravel()


def _pair_once(u: ExtendedHomogeneousDistribution, phi: TestFunction, rule: SphereRule,
               n_panels: int, order: int) -> complex:
    g = u.grading
    omega = rule.nodes
    dens = angular_density(g, omega)
    q = QuasiNorm(g)(omega)
    u_om = u(omega)
    rho_star = _exit_radius(g, omega, phi.support_radius)
    t, wt = _gauss_panels(n_panels, order)
    r = rho_star[:, None] * t[None, :]  # (n, k)
    pts = omega[:, None, :] * np.power(r[:, :, None], g.weight_array)
    vals = phi(pts.reshape(-1, g.dim)).reshape(r.shape)
    phi0 = phi.value_at_zero
    if u.critical:
        # int_0^rho* (phi(delta_r w) - phi0) dr/r + phi0 log(rho* q(w)); rho* >= 1/q is not needed
        radial = np.sum((vals - phi0) * (wt / t)[None, :], axis=1) + phi0 * np.log(rho_star * q)
    else:
        p = u.degree + g.d_H - 1
        radial = np.sum(vals * r**p * wt[None, :], axis=1) * rho_star
    return complex(rule.integrate(dens * u_om * radial))


def pair(u: ExtendedHomogeneousDistribution, phi: TestFunction, accuracy_degree: int = 40,
         n_panels: int = 24, order: int = 16, rtol: float = 1e-9, check: bool = True) -> complex:
    """Canonically regularised pairing ``<u, phi>``.

    With ``check`` the pairing is recomputed with a finer radial and angular
    rule and :class:`ConvergenceError` is raised when the two differ by more
    than ``rtol`` (relative to ``1 + |value|``).
    """
    d = u.grading.dim
    deg = accuracy_degree if d <= 3 else min(accuracy_degree, 16)
    coarse = _pair_once(u, phi, sphere_quadrature(d, deg), n_panels, order)
    if not check:
        return coarse
    fine = _pair_once(u, phi, sphere_quadrature(d, deg + deg // 2), 2 * n_panels, order)
    if abs(fine - coarse) > rtol * (1.0 + abs(fine)):
        raise ConvergenceError(f"pairing not converged: {coarse} vs {fine}")
    return fine


def dilation_cocycle(u: ExtendedHomogeneousDistribution, s: float, phi: TestFunction, **kw) -> complex:
    """``<beta_s^* u, phi> - s^(-d_H) <u, phi>``, where ``<beta_s^* u, phi> = s^(-d_H) <u, phi o delta_(1/s)>``."""
    if not s > 0 or s == 1:
        raise ValueError(f"dilation parameter must be positive and != 1, got {s}")
    if not u.critical:
        raise DomainError("the dilation cocycle is defined for degree -d_H")
    g = u.grading
    return s ** (-g.d_H) * (pair(u, phi.dilated(g, s), **kw) - pair(u, phi, **kw))


def cocycle_composition_defect(u: ExtendedHomogeneousDistribution, s: float, t: float,
                               phi: TestFunction, **kw) -> complex:
    """``D(st, phi) - s^(-d_H) D(t, phi o delta_(1/s)) - t^(-d_H) D(s, phi)`` for the cocycle ``D``."""
    g = u.grading
    dh = g.d_H
    lhs = dilation_cocycle(u, s * t, phi, **kw)
    return lhs - s ** (-dh) * dilation_cocycle(u, t, phi.dilated(g, s), **kw) - t ** (-dh) * dilation_cocycle(u, s, phi, **kw)


def c0(u, rule: SphereRule, grading: Grading | None = None, measure: str = "euler") -> complex:
    """Delta coefficient of the dilation cocycle of ``u``.

    ``measure="euler"`` integrates ``u * sum_i w_i omega_i^2`` over the
    Euclidean sphere (the Euler field contracted with ``dxi``); this is the
    coefficient for which ``beta_s^* u - s^-d_H u = s^-d_H log(s) c0 delta``
    holds.  ``measure="euclidean"`` integrates ``u`` against plain
    ``dsigma``.  Both agree for the trivial grading.
    """
    vals = np.asarray(u(rule.nodes))
    if measure == "euler":
        if grading is not None:
            vals = vals * euler_density(grading, rule.nodes)
    elif measure != "euclidean":
        raise ValueError(f"unknown measure {measure!r}")
    return complex(rule.integrate(vals))


def ft_log(d: int, xi) -> float:
    """Fourier transform of ``log|z|`` on R^d away from 0: ``-(2 pi)^d / (omega_d |xi|^d)``."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (d,):
        raise ValueError(f"xi must have shape ({d},)")
    r = float(np.linalg.norm(xi))
    if r == 0.0:
        raise DomainError("the transform of log|z| is only a function away from xi = 0")
    return -((2.0 * math.pi) ** d) / (surface_area(d) * r**d)


def grafakos_decompose(f0: HomogeneousTerm, probe_radii: Sequence[float] = (1.0, 2.0, 4.0),
                       accuracy_degree: int | None = None, x=None, rtol: float = 1e-6,
                       bump_widths: Sequence[float] = (1.0, 0.5, 0.25)) -> AngularDecomposition:
    """Split ``FT(f0)`` for degree-0 ``f0`` into ``b delta_0`` and ``Omega(theta)/|xi|^d``.

    ``Omega(theta)`` is read off ``r^d FT(f0)(r theta)`` on the probe radii
    (the value must not depend on ``r``; the spread is the error).  ``b`` is
    the pairing of ``FT(f0)`` with Gaussians ``exp(-|xi|^2/(2 eps^2))``
    evaluated through Parseval; ``W_Omega`` pairs to zero with radial test
    functions once ``Omega`` has mean zero, so only ``b`` survives.
    """
    g = f0.grading
    if not g.is_trivial or f0.degree != 0:
        raise DomainError("grafakos_decompose needs a degree-0 term on a trivial grading")
    d = g.dim
    x = np.zeros(d) if x is None else np.asarray(x, dtype=float)
    rule = sphere_quadrature(d, accuracy_degree if accuracy_degree is not None else {1: 1, 2: 16, 3: 8}.get(d, 4))
    term = PseudoHomogeneousTerm(g, 0, f0)
    samples = np.empty((len(rule), len(probe_radii)), dtype=complex)
    for i, theta in enumerate(rule.nodes):
        for j, r in enumerate(probe_radii):
            samples[i, j] = r**d * kernel_term_to_symbol_term(term, x, xi=r * theta).value
    values = samples[:, -1]
    scale = max(float(np.max(np.abs(samples))), 1.0)
    omega_err = float(np.max(np.abs(samples - values[:, None])))
    if omega_err > rtol * scale:
        raise ConvergenceError(f"r^d FT(f0)(r theta) not constant in r: spread {omega_err:.3e}")

    # b from Parseval against Gaussians of shrinking width
    fine = sphere_quadrature(d, 2 * rule.degree if d > 1 else 1)
    avg = fine.integrate(np.asarray(f0(x, fine.nodes), dtype=complex))
    bs = []
    for eps in bump_widths:
        # (2 pi)^(d/2) eps^d int f0(z) exp(-eps^2 |z|^2 / 2) dz; radial factor in closed form
        radial = 2.0 ** (d / 2.0 - 1.0) * math.gamma(d / 2.0) / eps**d
        bs.append((2.0 * math.pi) ** (d / 2.0) * eps**d * avg * radial)
    bs = np.asarray(bs)
    b_err = float(np.max(np.abs(bs - bs[-1])))

    def omega(theta, _f=f0, _x=x):
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        return np.array([kernel_term_to_symbol_term(term, _x, xi=th).value for th in theta])

    mean = complex(rule.integrate(values))
    return AngularDecomposition(complex(bs[-1]), omega, rule.nodes, values, rule, mean, b_err, omega_err)
