"""Built-in operator models referenced by name.

Expressions such as ``"log_kernel(p0=bump) + 0.5*homog0(odd)"`` are parsed
with :mod:`ast` (no evaluation of arbitrary code) into linear combinations of
catalog entries:

``log_kernel(p0)``
    kernel ``chi(v) log|v| p0(x)``; ``p0`` is a number, ``const``, ``bump``
    (unit-mass bump in x) or ``wave``.
``homog0(profile)``
    kernel ``chi(v) a(x) f0(v/|v|)`` with ``f0`` one of ``odd`` (theta_1),
    ``even`` (theta_1^2) or ``mixed`` (theta_1^3 + theta_d^2/2 + 1/4).
``norm_power(m)``
    symbol ``|xi|^m``; on trivial gradings with ``m <= -d`` the Riesz kernel
    is attached as fibre kernel.
``graded_norm_power(m)``, ``graded_odd(m)``
    symbols ``rho^m`` and ``xi_1 rho^(m-1)`` with
    ``rho = (xi_0^2 + |xi'|^4)^(1/4)`` (Heisenberg gradings).
``bessel_potential(m, J)``
    symbol ``(1+|xi|^2)^(m/2)`` truncated to ``J`` non-zero terms, with its
    exact Bessel-potential kernel.
``gaussian``
    smoothing operator with kernel ``exp(-|v|^2)``.
"""
from __future__ import annotations

import ast
import math
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma, kv

from .errors import SpecError
from .graded import Grading, QuasiNorm, surface_area
from .residue import OperatorModel
from .symbols import (
    CutoffFunction,
    HomogeneousTerm,
    KernelExpansion,
    PolySymbol,
    PseudoHomogeneousTerm,
    bessel_potential_expansion,
    norm_power_term,
)

__all__ = ["build_operator", "CATALOG", "bessel_kernel", "riesz_kernel", "unit_bump_mass", "p0_profile"]


@lru_cache(maxsize=None)
def unit_bump_mass(d: int) -> float:
    """Integral over R^d of ``exp(1 - 1/(1-|x|^2))`` on the unit ball."""
    f = lambda r: math.exp(1.0 - 1.0 / (1.0 - r * r)) * r ** (d - 1) if r < 1.0 else 0.0
    return surface_area(d) * quad(f, 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)[0]


def p0_profile(spec, d: int):
    """``(callable x -> p0(x), label)`` for a log_kernel ``p0`` argument."""
    if isinstance(spec, (int, float)):
        c = float(spec)
        return lambda x: np.full(np.shape(x)[:-1], c), f"{c:g}"
    if spec == "const":
        return lambda x: np.ones(np.shape(x)[:-1]), "const"
    if spec == "bump":
        mass = unit_bump_mass(d)

        def bump(x):
            t = np.sum(np.asarray(x) ** 2, axis=-1)
            out = np.zeros(np.shape(t))
            inside = t < 1.0
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside])) / mass
            return out

        return bump, "bump"
    if spec == "wave":
        return lambda x: 1.0 + 0.5 * np.cos(np.sum(np.asarray(x), axis=-1)), "wave"
    raise SpecError(f"unknown p0 profile {spec!r} (expected a number, const, bump or wave)", field="p0")


def _angular_profile(name: str, d: int):
    last = d - 1
    profiles = {
        "odd": lambda th: th[..., 0],
        "even": lambda th: th[..., 0] ** 2,
        "mixed": lambda th: th[..., 0] ** 3 + 0.5 * th[..., last] ** 2 + 0.25,
    }
    if name not in profiles:
        raise SpecError(f"unknown homog0 profile {name!r} (expected odd, even or mixed)", field="profile")
    return profiles[name]


def _amplitude(x) -> np.ndarray:
    return 1.0 + 0.25 * np.sin(np.sum(np.asarray(x, dtype=float), axis=-1))


def log_kernel(grading: Grading, p0="const", cutoff: CutoffFunction | None = None) -> OperatorModel:
    d = grading.dim
    prof, label = p0_profile(p0, d)
    p = HomogeneousTerm(grading, 0, lambda x, z: np.broadcast_to(prof(x), np.shape(z)[:-1]), f"p0={label}")
    term = PseudoHomogeneousTerm(grading, 0, None, p)
    kernel = KernelExpansion.for_order(grading, -grading.d_H, [term])
    return OperatorModel(grading, -grading.d_H, kernel=kernel, cutoff=_cutoff(grading, cutoff),
                         name=f"log_kernel(p0={label})")


def homog0(grading: Grading, profile="mixed", cutoff: CutoffFunction | None = None) -> OperatorModel:
    if not grading.is_trivial:
        raise SpecError("homog0 is defined on trivial gradings", field="operator")
    d = grading.dim
    shape = _angular_profile(profile, d)

    def f0(x, z):
        z = np.asarray(z, dtype=float)
        th = z / np.linalg.norm(z, axis=-1, keepdims=True)
        return _amplitude(x) * shape(th)

    term = PseudoHomogeneousTerm(grading, 0, HomogeneousTerm(grading, 0, f0, f"homog0({profile})"))
    kernel = KernelExpansion.for_order(grading, -d, [term])
    return OperatorModel(grading, -d, kernel=kernel, cutoff=_cutoff(grading, cutoff), name=f"homog0({profile})")


def riesz_kernel(alpha: float, d: int):
    """Inverse FT of ``|xi|^-alpha`` for ``alpha >= d`` up to smooth terms.

    Returns ``(coefficient, has_log)``: the kernel is ``c |v|^(alpha-d)``, or
    ``c |v|^(alpha-d) log|v|`` when ``alpha - d`` is an even integer.
    """
    kappa = alpha - d
    if kappa < 0:
        raise ValueError("only alpha >= d is supported")
    if float(kappa).is_integer() and int(kappa) % 2 == 0:
        k = int(kappa) // 2
        c = (-1) ** (k + 1) * 2.0 / (2.0 ** (d + 2 * k) * math.pi ** (d / 2.0) * math.factorial(k) * gamma(d / 2.0 + k))
        return float(c), True
    return float(gamma((d - alpha) / 2.0) / (2.0**alpha * math.pi ** (d / 2.0) * gamma(alpha / 2.0))), False


def bessel_kernel(alpha: float, d: int, r) -> np.ndarray:
    """Kernel of ``(1+|xi|^2)^(-alpha/2)`` at distance ``r > 0``."""
    r = np.asarray(r, dtype=float)
    c = (2.0 * math.pi) ** (d / 2.0) * 2.0 ** (alpha / 2.0 - 1.0) * gamma(alpha / 2.0)
    return r ** ((alpha - d) / 2.0) * kv((d - alpha) / 2.0, r) / c


def norm_power(grading: Grading, m, cutoff: CutoffFunction | None = None) -> OperatorModel:
    m = _integer(m, "m")
    symbol = PolySymbol(grading, m, (norm_power_term(grading, m),))
    fiber = None
    kernel = None
    cut = _cutoff(grading, cutoff)
    if grading.is_trivial and m <= -grading.dim:
        d = grading.dim
        c, has_log = riesz_kernel(-m, d)
        kappa = -m - d
        qn = QuasiNorm(grading)
        h = HomogeneousTerm(grading, kappa, lambda x, z, c=c: c * qn(z) ** kappa, "riesz")
        term = PseudoHomogeneousTerm(grading, kappa, None, h) if has_log else PseudoHomogeneousTerm(grading, kappa, h)
        kernel = KernelExpansion(grading, kappa, (term,))
    return OperatorModel(grading, m, symbol=symbol, kernel=kernel, fiber=fiber, cutoff=cut, name=f"norm_power({m})")


def _rho(z: np.ndarray) -> np.ndarray:
    return (z[..., 0] ** 2 + np.sum(z[..., 1:] ** 2, axis=-1) ** 2) ** 0.25


def graded_norm_power(grading: Grading, m, cutoff: CutoffFunction | None = None) -> OperatorModel:
    _require_heisenberg(grading, "graded_norm_power")
    m = _integer(m, "m")
    h = HomogeneousTerm(grading, m, lambda x, z: _rho(np.asarray(z, dtype=float)) ** m, f"rho^{m}")
    return OperatorModel(grading, m, symbol=PolySymbol(grading, m, (h,)), cutoff=_cutoff(grading, cutoff),
                         name=f"graded_norm_power({m})")


def graded_odd(grading: Grading, m, cutoff: CutoffFunction | None = None) -> OperatorModel:
    _require_heisenberg(grading, "graded_odd")
    m = _integer(m, "m")

    def f(x, z):
        z = np.asarray(z, dtype=float)
        return z[..., 1] * _rho(z) ** (m - 1)

    h = HomogeneousTerm(grading, m, f, f"xi_1 rho^{m - 1}")
    return OperatorModel(grading, m, symbol=PolySymbol(grading, m, (h,)), cutoff=_cutoff(grading, cutoff),
                         name=f"graded_odd({m})")


def bessel_potential(grading: Grading, m, J=3, cutoff: CutoffFunction | None = None) -> OperatorModel:
    if not grading.is_trivial:
        raise SpecError("bessel_potential is defined on trivial gradings", field="operator")
    m, J = _integer(m, "m"), _integer(J, "J")
    d = grading.dim
    symbol = bessel_potential_expansion(m, d, J)
    alpha = -m
    fiber = lambda x, v: np.asarray(bessel_kernel(alpha, d, np.linalg.norm(v, axis=-1)), dtype=complex)
    return OperatorModel(grading, m, symbol=symbol, fiber=fiber, cutoff=_cutoff(grading, cutoff),
                         name=f"bessel_potential({m},J={J})")


def gaussian(grading: Grading, cutoff: CutoffFunction | None = None) -> OperatorModel:
    # smoothing: every symbol term vanishes; order declared just below critical
    m = -grading.d_H - 1
    symbol = PolySymbol(grading, m, (None,))
    fiber = lambda x, v: np.exp(-np.sum(np.asarray(v) ** 2, axis=-1)).astype(complex)
    return OperatorModel(grading, m, symbol=symbol, fiber=fiber, cutoff=_cutoff(grading, cutoff), name="gaussian")


CATALOG = {
    "log_kernel": log_kernel,
    "homog0": homog0,
    "norm_power": norm_power,
    "graded_norm_power": graded_norm_power,
    "graded_odd": graded_odd,
    "bessel_potential": bessel_potential,
    "gaussian": gaussian,
}


def _cutoff(grading: Grading, cutoff: CutoffFunction | None) -> CutoffFunction:
    if cutoff is None:
        return CutoffFunction(0.5, 1.0, grading)
    return CutoffFunction(cutoff.r0, cutoff.r1, grading)


def _integer(v, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not float(v).is_integer():
        raise SpecError(f"{name} must be an integer, got {v!r}", field=name)
    return int(v)


def _require_heisenberg(grading: Grading, name: str):
    w = grading.weights
    if not (w[0] == 2 and all(v == 1 for v in w[1:]) and len(w) >= 2):
        raise SpecError(f"{name} needs a Heisenberg grading", field="operator")


def _literal(node: ast.AST):
    if isinstance(node, ast.Name):
        return node.id
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _literal(node.operand)
        if not isinstance(v, (int, float)):
            raise SpecError(f"cannot negate {v!r}", field="operator")
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, str)):
        return node.value
    raise SpecError(f"unsupported argument {ast.unparse(node)!r}", field="operator")


def _build(node: ast.AST, grading: Grading, cutoff) -> OperatorModel:
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub)):
        left, right = _build(node.left, grading, cutoff), _build(node.right, grading, cutoff)
        return left + (right if isinstance(node.op, ast.Add) else right.scaled(-1.0))
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Mult):
        for coef, other in ((node.left, node.right), (node.right, node.left)):
            try:
                c = _literal(coef)
            except SpecError:
                continue
            if isinstance(c, (int, float)):
                return _build(other, grading, cutoff).scaled(float(c))
        raise SpecError(f"products need a numeric coefficient: {ast.unparse(node)!r}", field="operator")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return _build(node.operand, grading, cutoff).scaled(-1.0)
    if isinstance(node, ast.Name):
        node = ast.Call(func=node, args=[], keywords=[])
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        if name not in CATALOG:
            raise SpecError(f"unknown catalog term {name!r} (known: {', '.join(sorted(CATALOG))})", field="operator")
        args = [_literal(a) for a in node.args]
        kwargs = {k.arg: _literal(k.value) for k in node.keywords}
        try:
            return CATALOG[name](grading, *args, cutoff=cutoff, **kwargs)
        except TypeError as exc:
            raise SpecError(f"bad arguments for {name}: {exc}", field="operator") from exc
        except ValueError as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(f"{name}: {exc}", field="operator") from exc
    raise SpecError(f"cannot interpret {ast.unparse(node)!r}", field="operator")


def build_operator(expr: str, grading: Grading, cutoff: CutoffFunction | None = None) -> OperatorModel:
    """Parse a catalog expression into an :class:`OperatorModel`."""
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise SpecError(f"cannot parse operator expression {expr!r}: {exc.msg}", field="operator") from exc
    model = _build(tree.body, grading, cutoff)
    return model
