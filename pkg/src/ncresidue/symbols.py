"""Homogeneous and pseudo-homogeneous terms, symbol and kernel expansions.

Terms are stored as vectorised closures ``func(x, xi)`` together with their
declared degree and grading; no symbolic algebra is attempted.  ``x`` is the
base point (an opaque parameter) and ``xi`` an array of points whose last
axis is the coordinate axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _fourier
from .errors import ConvergenceError, DomainError, HomogeneityEvaluationError
from .graded import Grading, QuasiNorm, dilate

__all__ = [
    "HomogeneousTerm",
    "PseudoHomogeneousTerm",
    "SchwartzRemainder",
    "PolySymbol",
    "KernelExpansion",
    "CutoffFunction",
    "HomogeneityCheck",
    "LimitEstimate",
    "check_homogeneity",
    "cutoff_eval",
    "kernel_term_to_symbol_term",
    "default_t_sequence",
    "bessel_potential_expansion",
    "norm_power_term",
    "zero_term",
]

TermFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class HomogeneousTerm:
    """``h(x, xi)`` with ``h(x, delta_s xi) = s^degree h(x, xi)``."""

    grading: Grading
    degree: float
    func: TermFunc
    name: str = ""

    def __call__(self, x, xi) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))

    def __add__(self, other: "HomogeneousTerm") -> "HomogeneousTerm":
        if other.grading != self.grading or other.degree != self.degree:
            raise ValueError("can only add terms of equal grading and degree")
        f, g = self.func, other.func
        return HomogeneousTerm(self.grading, self.degree, lambda x, xi: f(x, xi) + g(x, xi),
                               f"{self.name}+{other.name}")

    def scaled(self, c: complex) -> "HomogeneousTerm":
        f = self.func
        return HomogeneousTerm(self.grading, self.degree, lambda x, xi: c * f(x, xi), f"{c}*{self.name}")


def zero_term(grading: Grading, degree: float) -> HomogeneousTerm:
    return HomogeneousTerm(grading, degree, lambda x, xi: np.zeros(np.shape(xi)[:-1]), "0")


def norm_power_term(grading: Grading, m: float, coefficient: float = 1.0) -> HomogeneousTerm:
    """``coefficient * |xi|^m`` for the grading's quasi-norm."""
    qn = QuasiNorm(grading)
    return HomogeneousTerm(grading, m, lambda x, xi: coefficient * qn(xi) ** m, f"|xi|^{m}")


@dataclass(frozen=True)
class PseudoHomogeneousTerm:
    """``f(x, z) + log|z| p(x, z)`` with ``f`` homogeneous and ``p`` a polynomial.

    Both parts have the same degree; ``p`` may only be present for degrees in
    N.  Either part may be ``None`` (identically zero).
    """

    grading: Grading
    degree: float
    f: HomogeneousTerm | None = None
    p: HomogeneousTerm | None = None

    def __post_init__(self):
        if self.p is not None and not (self.degree >= 0 and float(self.degree).is_integer()):
            raise ValueError(f"a log part requires a degree in N, got {self.degree}")
        for part in (self.f, self.p):
            if part is not None and (part.degree != self.degree or part.grading != self.grading):
                raise ValueError("parts must share the term's degree and grading")

    @property
    def qn(self) -> QuasiNorm:
        return QuasiNorm(self.grading)

    def __call__(self, x, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = np.zeros(z.shape[:-1], dtype=complex)
        if self.f is not None:
            out = out + self.f(x, z)
        if self.p is not None:
            with np.errstate(divide="ignore"):
                out = out + np.log(self.qn(z)) * self.p(x, z)
        return out

    def __add__(self, other: "PseudoHomogeneousTerm") -> "PseudoHomogeneousTerm":
        if other.grading != self.grading or other.degree != self.degree:
            raise ValueError("can only add terms of equal grading and degree")

        def combine(a, b):
            if a is None:
                return b
            return a if b is None else a + b

        return PseudoHomogeneousTerm(self.grading, self.degree, combine(self.f, other.f), combine(self.p, other.p))

    def scaled(self, c: complex) -> "PseudoHomogeneousTerm":
        return PseudoHomogeneousTerm(
            self.grading,
            self.degree,
            None if self.f is None else self.f.scaled(c),
            None if self.p is None else self.p.scaled(c),
        )


@dataclass(frozen=True)
class SchwartzRemainder:
    """Rapidly decaying kernel piece ``func(x, z)``.

    ``radius`` bounds the region outside which the function is below double
    precision relative to its maximum; ``decay_order`` is the largest ``k``
    for which ``|func| (1+|z|)^k`` is claimed bounded.
    """

    grading: Grading
    func: TermFunc
    radius: float
    decay_order: int = 20
    name: str = ""

    def __call__(self, x, z) -> np.ndarray:
        return self.func(np.asarray(x, dtype=float), np.asarray(z, dtype=float))

    def check_decay(self, x, sample_count: int = 200, seed: int = 0, r_max: float | None = None) -> float:
        """Largest sampled ``|func(z)| (1+|z|)^decay_order`` over random directions."""
        rng = np.random.default_rng(seed)
        r_max = r_max or 4.0 * self.radius
        z = rng.standard_normal((sample_count, self.grading.dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        z *= rng.uniform(0.0, r_max, size=(sample_count, 1))
        r = QuasiNorm(self.grading)(z)
        return float(np.max(np.abs(self(x, z)) * (1.0 + r) ** self.decay_order))


@dataclass(frozen=True)
class PolySymbol:
    """Finite truncation ``a ~ sum_j a_{m-j}`` of a polyhomogeneous symbol.

    ``terms[j]`` has degree ``m - j``; ``None`` stands for the zero function.
    """

    grading: Grading
    order: int
    terms: tuple[HomogeneousTerm | None, ...]
    remainder_order: float | None = None

    def __post_init__(self):
        for j, t in enumerate(self.terms):
            if t is not None and (t.degree != self.order - j or t.grading != self.grading):
                raise ValueError(f"term {j} must have degree {self.order - j}, got {t.degree}")

    def term(self, degree: int) -> HomogeneousTerm | None:
        j = self.order - degree
        if j < 0 or j >= len(self.terms) or j != int(j):
            return None
        return self.terms[int(j)]

    def __add__(self, other: "PolySymbol") -> "PolySymbol":
        if other.grading != self.grading:
            raise ValueError("symbols live on different gradings")
        top = max(self.order, other.order)
        low = min(self.order - len(self.terms), other.order - len(other.terms))
        terms = []
        for deg in range(top, low, -1):
            a, b = self.term(deg), other.term(deg)
            terms.append(a if b is None else (b if a is None else a + b))
        return PolySymbol(self.grading, top, tuple(terms))

    def scaled(self, c: complex) -> "PolySymbol":
        return PolySymbol(self.grading, self.order, tuple(None if t is None else t.scaled(c) for t in self.terms),
                          self.remainder_order)


@dataclass(frozen=True)
class KernelExpansion:
    """Finite pseudo-homogeneous kernel expansion ``k ~ sum_j k_{kappa+j}``.

    The leading degree is ``kappa = -m - d_H`` for an operator of order m.
    """

    grading: Grading
    leading_degree: int
    terms: tuple[PseudoHomogeneousTerm | None, ...]

    def __post_init__(self):
        for j, t in enumerate(self.terms):
            if t is not None and (t.degree != self.leading_degree + j or t.grading != self.grading):
                raise ValueError(f"kernel term {j} must have degree {self.leading_degree + j}")

    @classmethod
    def for_order(cls, grading: Grading, m: int, terms: Sequence[PseudoHomogeneousTerm | None]):
        return cls(grading, -m - grading.d_H, tuple(terms))

    def term(self, degree: int) -> PseudoHomogeneousTerm | None:
        j = degree - self.leading_degree
        if j < 0 or j >= len(self.terms):
            return None
        return self.terms[j]

    def __call__(self, x, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = np.zeros(z.shape[:-1], dtype=complex)
        for t in self.terms:
            if t is not None:
                out = out + t(x, z)
        return out

    def __add__(self, other: "KernelExpansion") -> "KernelExpansion":
        if other.grading != self.grading:
            raise ValueError("kernels live on different gradings")
        low = min(self.leading_degree, other.leading_degree)
        high = max(self.leading_degree + len(self.terms), other.leading_degree + len(other.terms))
        terms = []
        for deg in range(low, high):
            a, b = self.term(deg), other.term(deg)
            terms.append(a if b is None else (b if a is None else a + b))
        return KernelExpansion(self.grading, low, tuple(terms))

    def scaled(self, c: complex) -> "KernelExpansion":
        return KernelExpansion(self.grading, self.leading_degree,
                               tuple(None if t is None else t.scaled(c) for t in self.terms))


def _smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity step: 1 for u <= 0, 0 for u >= 1, built from exp(-1/t)."""
    u = np.asarray(u, dtype=float)

    def h(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    a, b = h(1.0 - u), h(u)
    return a / (a + b)


@dataclass(frozen=True)
class CutoffFunction:
    """Radial cutoff in the quasi-norm: 1 for ``|z| <= r0``, 0 for ``|z| >= r1``."""

    r0: float = 0.5
    r1: float = 1.0
    grading: Grading | None = field(default=None, compare=True)

    def __post_init__(self):
        if not 0 < self.r0 < self.r1:
            raise ValueError(f"cutoff radii must satisfy 0 < r0 < r1, got {self.r0}, {self.r1}")

    def profile(self, rho) -> np.ndarray:
        return _smooth_step((np.asarray(rho, dtype=float) - self.r0) / (self.r1 - self.r0))

    def __call__(self, z) -> np.ndarray:
        return cutoff_eval(self, z)


def cutoff_eval(chi: CutoffFunction, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    grading = chi.grading or Grading.trivial(z.shape[-1])
    return chi.profile(QuasiNorm(grading)(z))


@dataclass(frozen=True)
class HomogeneityCheck:
    ok: bool
    max_deviation: float
    worst_xi: np.ndarray | None = None
    worst_s: float | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_homogeneity(term: HomogeneousTerm, sample_count: int = 200, tol: float = 1e-10,
                      seed: int = 0, x=None, s_range=(0.1, 10.0)) -> HomogeneityCheck:
    """Sample ``|h(delta_s xi) - s^m h(xi)| / |s^m h(xi)|`` over random ``xi`` and ``s``.

    Where ``h(xi)`` is negligible the deviation is measured absolutely.
    """
    g = term.grading
    rng = np.random.default_rng(seed)
    x = np.zeros(g.dim) if x is None else np.asarray(x, dtype=float)
    xi = rng.standard_normal((sample_count, g.dim))
    s = np.exp(rng.uniform(np.log(s_range[0]), np.log(s_range[1]), size=sample_count))
    scaled = xi * np.power(s[:, None], g.weight_array)
    try:
        lhs = np.asarray(term(x, scaled), dtype=complex)
        base = np.asarray(term(x, xi), dtype=complex)
    except Exception as exc:  # pragma: no cover - exercised through the per-sample retry
        for i in range(sample_count):
            try:
                term(x, scaled[i:i + 1]), term(x, xi[i:i + 1])
            except Exception:
                raise HomogeneityEvaluationError(f"evaluation failed at xi={xi[i]}, s={s[i]}: {exc}") from exc
        raise
    bad = ~(np.isfinite(lhs) & np.isfinite(base))
    if np.any(bad):
        i = int(np.nonzero(bad)[0][0])
        raise HomogeneityEvaluationError(f"non-finite value at xi={xi[i]}, s={s[i]}")
    rhs = s ** term.degree * base
    denom = np.abs(rhs)
    scale = max(float(np.max(denom)), 1e-300)
    dev = np.where(denom > 1e-12 * scale, np.abs(lhs - rhs) / np.where(denom > 0, denom, 1.0),
                   np.abs(lhs - rhs) / scale)
    i = int(np.argmax(dev))
    return HomogeneityCheck(bool(dev[i] <= tol), float(dev[i]), xi[i], float(s[i]))


@dataclass(frozen=True)
class LimitEstimate:
    """Value of a limit together with the sequence it was extracted from."""

    value: complex
    error: float
    sequence: tuple[complex, ...] = ()
    parameters: tuple[float, ...] = ()
    angular_tail: float = 0.0

    def __complex__(self) -> complex:
        return complex(self.value)


def default_t_sequence(xi_norm: float, chi: CutoffFunction) -> tuple[float, ...]:
    """Cutoff dilations ``t`` used for the large-ball limit at frequency ``|xi|``.

    The smooth-cutoff truncation error decays like ``exp(-c sqrt(t |xi|))``,
    so the sequence is geometric in ``t |xi|`` up to ``t |xi| r1 = 1024``.
    """
    base = 1.0 / (max(xi_norm, 1e-3) * chi.r1)
    return tuple(base * T for T in (128.0, 256.0, 512.0, 1024.0))


def _limit_from_sequence(values: np.ndarray, params, tail: float) -> LimitEstimate:
    diffs = np.abs(np.diff(values))
    scale = max(float(np.max(np.abs(values))), 1e-300)
    floor = 1e-13 * scale
    if len(diffs) >= 2 and diffs[-1] > max(diffs[-2], floor):
        raise ConvergenceError(
            f"cutoff limit not converging: successive differences {diffs.tolist()} for t={list(params)}"
        )
    error = float(diffs[-1]) if len(diffs) else float("nan")
    return LimitEstimate(complex(values[-1]), error, tuple(complex(v) for v in values), tuple(params), tail)


def kernel_term_to_symbol_term(k_term, x, psi: CutoffFunction | None = None,
                               t_sequence: Sequence[float] | None = None, xi=None) -> LimitEstimate:
    """Symbol value ``lim_t int k(x,z) psi(z/t) exp(-i xi.z) dz`` at one ``xi != 0``.

    ``k_term`` is a :class:`PseudoHomogeneousTerm` (its degree kappa must give
    a negative symbol degree ``-kappa - d``) or a :class:`SchwartzRemainder`.
    Only the trivial grading is supported.  The integral is evaluated in polar
    coordinates, exactly in the angle and by Gauss-Legendre panels in the
    radius, for every ``t``; the estimate is the last value with the last
    successive difference as its error bound.
    """
    if not k_term.grading.is_trivial:
        raise DomainError("the cutoff Fourier limit is only implemented for the trivial grading")
    if xi is None:
        raise TypeError("xi is required")
    d = k_term.grading.dim
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (d,):
        raise ValueError(f"xi must have shape ({d},)")
    xi_norm = float(np.linalg.norm(xi))
    if xi_norm == 0.0:
        raise DomainError("the symbol is only evaluated away from xi = 0")
    psi = psi or CutoffFunction(0.5, 1.0)
    x = np.asarray(x, dtype=float)
    ts = np.asarray(t_sequence if t_sequence is not None else default_t_sequence(xi_norm, psi), dtype=float)
    if np.any(np.diff(ts) <= 0) or ts[0] <= 0:
        raise ValueError("t_sequence must be positive and increasing")
    xhat = xi / xi_norm

    if isinstance(k_term, SchwartzRemainder):
        return _schwartz_transform(k_term, x, psi, ts, xi_norm, xhat)
    if not isinstance(k_term, PseudoHomogeneousTerm):
        raise TypeError(f"unsupported kernel term {type(k_term).__name__}")
    kappa = k_term.degree
    if not -kappa - d < 0:
        raise DomainError(f"symbol degree {-kappa - d} must be negative")

    rho, w = _fourier.radial_panels(ts[-1] * psi.r1, xi_norm)
    base = w * rho ** (kappa + d - 1)
    integrand = np.zeros_like(rho, dtype=complex)
    tail = 0.0
    if k_term.f is not None:
        exp_f = _fourier.angular_expansion(lambda th: k_term.f(x, th), d, xhat)
        integrand += exp_f.transform(rho * xi_norm)
        tail = max(tail, exp_f.tail)
    if k_term.p is not None:
        exp_p = _fourier.angular_expansion(lambda th: k_term.p(x, th), d, xhat)
        integrand += np.log(rho) * exp_p.transform(rho * xi_norm)
        tail = max(tail, exp_p.tail)
    integrand *= base
    values = np.array([np.sum(integrand * psi.profile(rho / t)) for t in ts])
    return _limit_from_sequence(values, ts, tail)


def _schwartz_transform(k_term: SchwartzRemainder, x, psi, ts, xi_norm, xhat) -> LimitEstimate:
    d = k_term.grading.dim
    values = []
    tail = 0.0
    for t in ts:
        r_max = min(k_term.radius, t * psi.r1)
        rho, w = _fourier.radial_panels(r_max, xi_norm, levels=0, max_width=0.5)
        total = 0.0 + 0.0j
        for r_i, w_i in zip(rho, w):
            exp_k = _fourier.angular_expansion(lambda th: k_term(x, r_i * th), d, xhat, n_max=32)
            tail = max(tail, exp_k.tail)
            total += w_i * r_i ** (d - 1) * psi.profile(r_i / t) * exp_k.transform(np.array([r_i * xi_norm]))[0]
        values.append(total)
    values = np.array(values)
    return _limit_from_sequence(values, ts, tail)


def _binomial(a: float, k: int) -> float:
    # generalised binomial coefficient; scipy's binom returns nan at negative integers
    return math.prod((a - i) / (i + 1) for i in range(k))


def bessel_potential_expansion(m: int, d: int, J: int) -> PolySymbol:
    """First ``J`` non-zero terms of ``(1+|xi|^2)^(m/2)`` in decreasing homogeneity.

    ``(1+r^2)^(m/2) = sum_k binom(m/2, k) r^(m-2k)``; odd slots are zero.
    """
    if m >= 0:
        raise ValueError(f"order must be negative, got {m}")
    if J < 1:
        raise ValueError("J must be at least 1")
    g = Grading.trivial(d)
    terms: list[HomogeneousTerm | None] = []
    for j in range(2 * J - 1):
        if j % 2:
            terms.append(None)
            continue
        k = j // 2
        terms.append(norm_power_term(g, m - j, _binomial(m / 2.0, k)))
    return PolySymbol(g, int(m), tuple(terms), remainder_order=m - 2 * J)


def log_coefficient(d: int) -> float:
    """``omega_d / (2 pi)^d``: the log|z| coefficient of the kernel of |xi|^-d, up to sign."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0) / (2.0 * math.pi) ** d
