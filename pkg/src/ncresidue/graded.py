"""Graded coordinate spaces: dilations, homogeneous quasi-norms and sphere rules.

A grading assigns a positive integer weight to every coordinate of R^d.
The dilation ``delta_s`` scales coordinate ``i`` by ``s**w_i`` and the
homogeneous dimension is the sum of the weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "Grading",
    "QuasiNorm",
    "SphereRule",
    "dilate",
    "quasi_norm",
    "surface_area",
    "sphere_quadrature",
    "euler_density",
    "MAX_SPHERE_NODES",
]

#: Resource bound for :func:`sphere_quadrature`.
MAX_SPHERE_NODES = 2_000_000


@dataclass(frozen=True)
class Grading:
    """Positive integer weights ``w_1..w_d`` of the graded coordinates."""

    weights: tuple[int, ...]

    def __post_init__(self):
        w = tuple(int(v) for v in self.weights)
        if len(w) < 1:
            raise ValueError("a grading needs at least one coordinate")
        if any(v < 1 for v in w) or any(int(v) != v for v in self.weights):
            raise ValueError(f"grading weights must be positive integers, got {self.weights}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def trivial(cls, d: int) -> "Grading":
        return cls((1,) * int(d))

    @classmethod
    def heisenberg(cls, n: int, m: int = 0) -> "Grading":
        """Grading of H_n x R^m: the central coordinate first, with weight 2."""
        if n < 0 or m < 0 or 2 * n + m < 1:
            raise ValueError(f"invalid Heisenberg model H_{n} x R^{m}")
        return cls((2,) + (1,) * (2 * n + m))

    @property
    def dim(self) -> int:
        return len(self.weights)

    @property
    def d_H(self) -> int:
        return sum(self.weights)

    @property
    def is_trivial(self) -> bool:
        return all(w == 1 for w in self.weights)

    @cached_property
    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def label(self) -> str:
        if self.is_trivial:
            return f"trivial({self.dim})"
        return f"weights{list(self.weights)}"


def dilate(grading: Grading, s: float, xi) -> np.ndarray:
    """Apply ``delta_s``; ``xi`` may be one point or an array of points (last axis)."""
    if not s > 0:
        raise ValueError(f"dilation parameter must be positive, got {s}")
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != grading.dim:
        raise ValueError(f"point has dimension {xi.shape[-1]}, grading has {grading.dim}")
    return xi * np.power(float(s), grading.weight_array)


@dataclass(frozen=True)
class QuasiNorm:
    """``|xi| = (sum |xi_i|^(2N/w_i))^(1/(2N))`` with ``N = lcm(weights)``.

    Smooth away from the origin, homogeneous of degree one under the
    dilations, and Euclidean for the trivial grading.
    """

    grading: Grading
    N: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "N", reduce(math.lcm, self.grading.weights, 1))

    @cached_property
    def exponents(self) -> np.ndarray:
        return 2.0 * self.N / self.grading.weight_array

    def __call__(self, xi) -> np.ndarray:
        return quasi_norm(self, xi)


def quasi_norm(qn: QuasiNorm, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if qn.grading.is_trivial:
        return np.linalg.norm(xi, axis=-1)
    # log-sum-exp: the exponents 2N/w_i reach 2N and overflow/underflow easily
    with np.errstate(divide="ignore"):
        logs = qn.exponents * np.log(np.abs(xi))
    top = np.max(logs, axis=-1)
    zero = ~np.isfinite(top)
    top = np.where(zero, 0.0, top)
    total = np.sum(np.exp(logs - top[..., None]), axis=-1)
    with np.errstate(divide="ignore"):
        out = np.exp((np.log(total) + top) / (2.0 * qn.N))
    return np.where(zero, 0.0, out)


def surface_area(d: int) -> float:
    """Surface measure of the unit sphere S^(d-1) in R^d (counting measure for d=1)."""
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {d}")
    return float(2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0))


@dataclass(frozen=True)
class SphereRule:
    """Quadrature rule on the Euclidean unit sphere S^(d-1)."""

    d: int
    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, values) -> complex | float:
        """Sum of ``weights * values`` over the nodes (values indexed by node)."""
        values = np.asarray(values)
        return np.tensordot(self.weights, values, axes=(0, 0))

    def __len__(self) -> int:
        return len(self.weights)


def _circle_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    phi = 2.0 * np.pi * np.arange(n) / n
    nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    return nodes, np.full(n, 2.0 * np.pi / n)


def _sphere_rule(d: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 2:
        # even node count keeps the rule symmetric under every coordinate flip
        n = degree + 1
        n += n % 2
        return _circle_rule(max(n, 2))
    # xi = (u, sqrt(1-u^2) eta), d sigma = (1-u^2)^((d-3)/2) du d sigma_(d-2)(eta)
    a = (d - 3) / 2.0
    n_u = degree // 2 + 1
    u, wu = roots_jacobi(n_u, a, a)
    eta, weta = _sphere_rule(d - 1, degree)
    rad = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    nodes = np.concatenate(
        [
            np.repeat(u, len(eta))[:, None],
            (rad[:, None, None] * eta[None, :, :]).reshape(-1, d - 1),
        ],
        axis=1,
    )
    return nodes, np.outer(wu, weta).ravel()


def sphere_quadrature(d: int, accuracy_degree: int) -> SphereRule:
    """Product rule on S^(d-1), exact for polynomials up to ``accuracy_degree``.

    d=1 is the two-point counting rule, d=2 the equispaced trapezoid rule and
    d>=3 a Gauss-Jacobi rule in the first coordinate times the rule on
    S^(d-2) (Gauss-Legendre x trapezoid for d=3).
    """
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {d}")
    if accuracy_degree < 0:
        raise ValueError("accuracy_degree must be non-negative")
    expected = 2 if d == 1 else accuracy_degree + 2
    for _ in range(3, d + 1):
        expected *= accuracy_degree // 2 + 1
    if expected > MAX_SPHERE_NODES:
        raise ValueError(
            f"sphere rule for d={d}, degree={accuracy_degree} would need ~{expected} nodes "
            f"(limit {MAX_SPHERE_NODES})"
        )
    nodes, weights = _sphere_rule(int(d), int(accuracy_degree))
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return SphereRule(int(d), nodes, weights, int(accuracy_degree))


def euler_density(grading: Grading, omega) -> np.ndarray:
    """Density of the graded polar decomposition on the Euclidean unit sphere.

    Writing ``v = delta_r(omega)`` with ``omega`` on the Euclidean sphere,
    Lebesgue measure is ``r^(d_H - 1) dr * sum_i w_i omega_i^2 dsigma(omega)``;
    the factor is the Euler field ``sum w_i xi_i d/dxi_i`` contracted with the
    unit normal. It is identically 1 for the trivial grading.
    """
    omega = np.asarray(omega, dtype=float)
    return np.sum(grading.weight_array * omega * omega, axis=-1)
