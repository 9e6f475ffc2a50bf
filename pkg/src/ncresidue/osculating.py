"""Osculating groups of the model spaces and Haar-measure grid convolution.

Two groups are supported: the abelian R^dim and H_n x R^m in exponential
coordinates ``(t, x_1..x_n, y_1..y_n, z_1..z_m)`` with the symmetric law

    (t, x, y, z) (t', x', y', z') = (t + t' + (x.y' - y.x')/2, x + x', y + y', z + z').

Haar measure is Lebesgue measure in these coordinates on both groups.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import SupportOverflowError
from .graded import Grading

try:
    if os.environ.get("NCRESIDUE_PURE_PYTHON"):
        raise ImportError("pure Python backend requested")
    from . import _kernels as _backend

    BACKEND = "cython"
except ImportError:
    from . import _kernels_py as _backend

    BACKEND = "python"

__all__ = [
    "OsculatingGroup",
    "GridFunction",
    "group_law",
    "inverse",
    "convolve",
    "convolve_at",
    "commutator_at_identity",
    "trace_engine",
    "BACKEND",
]


@dataclass(frozen=True)
class OsculatingGroup:
    kind: str  # "abelian" or "heisenberg"
    n: int = 0
    m: int = 0
    abelian_dim: int = 0

    @classmethod
    def abelian(cls, dim: int) -> "OsculatingGroup":
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        return cls("abelian", abelian_dim=int(dim))

    @classmethod
    def heisenberg(cls, n: int, m: int = 0) -> "OsculatingGroup":
        if n < 1 or m < 0:
            raise ValueError(f"invalid Heisenberg model H_{n} x R^{m}")
        return cls("heisenberg", n=int(n), m=int(m))

    @property
    def dim(self) -> int:
        return self.abelian_dim if self.kind == "abelian" else 2 * self.n + 1 + self.m

    @property
    def grading(self) -> Grading:
        if self.kind == "abelian":
            return Grading.trivial(self.abelian_dim)
        return Grading.heisenberg(self.n, self.m)

    @property
    def identity(self) -> np.ndarray:
        return np.zeros(self.dim)

    def law(self, g, h) -> np.ndarray:
        return group_law(self, g, h)

    def inverse(self, g) -> np.ndarray:
        return inverse(self, g)

    def dilate(self, s: float, g) -> np.ndarray:
        from .graded import dilate

        return dilate(self.grading, s, g)


def _check(G: OsculatingGroup, *pts) -> list[np.ndarray]:
    out = []
    for p in pts:
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != G.dim:
            raise ValueError(f"point has dimension {p.shape[-1]}, group has {G.dim}")
        out.append(p)
    return out


def group_law(G: OsculatingGroup, g, h) -> np.ndarray:
    g, h = _check(G, g, h)
    out = g + h
    if G.kind == "heisenberg":
        n = G.n
        gx, gy = g[..., 1:1 + n], g[..., 1 + n:1 + 2 * n]
        hx, hy = h[..., 1:1 + n], h[..., 1 + n:1 + 2 * n]
        out[..., 0] += 0.5 * (np.sum(gx * hy, axis=-1) - np.sum(gy * hx, axis=-1))
    return out


def inverse(G: OsculatingGroup, g) -> np.ndarray:
    (g,) = _check(G, g)
    return -g


@dataclass(frozen=True)
class GridFunction:
    """Samples on the uniform grid ``linspace(-L_k, L_k, N_k)`` per axis.

    The grid is symmetric about the origin, so ``y -> -y`` maps nodes to
    nodes.  Values on the boundary layer must vanish.
    """

    half_widths: tuple[float, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != len(self.half_widths) or any(s < 2 for s in v.shape):
            raise ValueError("values must have one axis of length >= 2 per half width")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "half_widths", tuple(float(h) for h in self.half_widths))

    @classmethod
    def sample(cls, func: Callable[[np.ndarray], np.ndarray], half_widths: Sequence[float],
               resolution: int | Sequence[int], boundary_rtol: float = 1e-14) -> "GridFunction":
        """Sample ``func`` (vectorised on ``(..., dim)`` points); the boundary layer is zeroed.

        Raises :class:`SupportOverflowError` when ``func`` is not negligible there.
        """
        dim = len(half_widths)
        res = (resolution,) * dim if np.isscalar(resolution) else tuple(resolution)
        axes = [np.linspace(-h, h, r) for h, r in zip(half_widths, res)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        vals = np.asarray(func(pts), dtype=complex)
        edge = _boundary_max(vals)
        top = float(np.max(np.abs(vals))) if vals.size else 0.0
        if edge > boundary_rtol * max(top, 1e-300):
            raise SupportOverflowError(f"function is {edge:.3e} on the grid boundary (max {top:.3e})")
        vals = vals.copy()
        _zero_boundary(vals)
        return cls(tuple(half_widths), vals)

    @property
    def dim(self) -> int:
        return len(self.half_widths)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def spacing(self) -> np.ndarray:
        return 2.0 * np.asarray(self.half_widths) / (np.asarray(self.shape) - 1)

    @property
    def origin(self) -> np.ndarray:
        return -np.asarray(self.half_widths)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(-h, h, s) for h, s in zip(self.half_widths, self.shape)]

    def points(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1).reshape(-1, self.dim)

    def cell_weights(self) -> np.ndarray:
        """Tensor trapezoid weights."""
        w = np.ones(self.shape)
        for k, (h, s) in enumerate(zip(self.spacing, self.shape)):
            wk = np.full(s, h)
            wk[[0, -1]] *= 0.5
            w = w * wk.reshape([-1 if j == k else 1 for j in range(self.dim)])
        return w

    def integral(self) -> complex:
        return complex(np.sum(self.values * self.cell_weights()))

    def support_box(self, rtol: float = 0.0) -> np.ndarray:
        """Per-axis half width of the smallest centred box containing the non-zero samples."""
        mag = np.abs(self.values)
        mask = mag > rtol * (mag.max() if mag.size else 0.0)
        if not mask.any():
            return np.zeros(self.dim)
        pts = self.points()[mask.ravel()]
        return np.max(np.abs(pts), axis=0)

    def __call__(self, x) -> np.ndarray:
        """Multilinear interpolation, zero outside the grid."""
        from ._kernels_py import _interp

        x = np.asarray(x, dtype=float)
        return _interp(self.values.ravel(), x, self.origin, self.spacing, np.asarray(self.shape))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._same_grid(other)
        return GridFunction(self.half_widths, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._same_grid(other)
        return GridFunction(self.half_widths, self.values - other.values)

    def scaled(self, c: complex) -> "GridFunction":
        return GridFunction(self.half_widths, c * self.values)

    def _same_grid(self, other):
        if other.half_widths != self.half_widths or other.shape != self.shape:
            raise ValueError("grid functions live on different grids")


def _boundary_max(vals: np.ndarray) -> float:
    out = 0.0
    for k in range(vals.ndim):
        for i in (0, -1):
            out = max(out, float(np.max(np.abs(np.take(vals, i, axis=k)))))
    return out


def _zero_boundary(vals: np.ndarray) -> None:
    for k in range(vals.ndim):
        idx = [slice(None)] * vals.ndim
        for i in (0, -1):
            idx[k] = i
            vals[tuple(idx)] = 0.0


def _product_box(G: OsculatingGroup, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Half widths of a box containing ``A . B`` for centred boxes ``A``, ``B``."""
    out = a + b
    if G.kind == "heisenberg":
        n = G.n
        out[0] += 0.5 * (np.sum(a[1:1 + n] * b[1 + n:1 + 2 * n]) + np.sum(a[1 + n:1 + 2 * n] * b[1:1 + n]))
    return out


def convolve_at(G: OsculatingGroup, f: GridFunction, g: GridFunction, xs, threads: int = 1) -> np.ndarray:
    """``(f * g)(x) = int f(y) g(y^-1 x) dy`` at the rows of ``xs`` (trapezoid rule in y).

    Both factors vanish on their grid boundaries, so summing over the grid of
    ``f`` and interpolating ``g`` with zero extension is exact at any ``x``.
    """
    if f.dim != G.dim or g.dim != G.dim:
        raise ValueError(f"grid functions must have dimension {G.dim}")
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[1] != G.dim:
        raise ValueError(f"evaluation points must have dimension {G.dim}")
    fw = (f.values * f.cell_weights()).ravel()
    keep = fw != 0
    ys = np.ascontiguousarray(f.points()[keep])
    fw = fw[keep]
    args = (
        int(G.kind == "heisenberg"), int(G.n), ys, np.ascontiguousarray(fw.real), np.ascontiguousarray(fw.imag),
        np.ascontiguousarray(g.values.real.ravel()), np.ascontiguousarray(g.values.imag.ravel()),
        np.ascontiguousarray(g.origin), np.ascontiguousarray(g.spacing),
        np.asarray(g.shape, dtype=np.int_),
    )
    if threads <= 1 or len(xs) < 2 * threads:
        return np.asarray(_backend.convolve_at(*args, np.ascontiguousarray(xs)))
    chunks = np.array_split(xs, threads)
    with ThreadPoolExecutor(threads) as pool:
        parts = pool.map(lambda c: np.asarray(_backend.convolve_at(*args, np.ascontiguousarray(c))), chunks)
        return np.concatenate(list(parts))


def convolve(G: OsculatingGroup, f: GridFunction, g: GridFunction, out_half_widths=None,
             out_resolution=None, threads: int = 1) -> GridFunction:
    """``f * g`` sampled on a centred output grid.

    The default output box is the product box of the two supports plus one
    cell; :class:`SupportOverflowError` is raised if a requested box cannot
    contain the product support.
    """
    need = _product_box(G, f.support_box(), g.support_box())
    if out_half_widths is None:
        out_half_widths = need + np.maximum(f.spacing, g.spacing)
    out_half_widths = np.asarray(out_half_widths, dtype=float)
    if np.any(need >= out_half_widths):
        raise SupportOverflowError(f"product support {need.tolist()} does not fit box {out_half_widths.tolist()}")
    res = out_resolution or f.shape
    res = (res,) * G.dim if np.isscalar(res) else tuple(res)
    axes = [np.linspace(-h, h, r) for h, r in zip(out_half_widths, res)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, G.dim)
    vals = convolve_at(G, f, g, pts, threads=threads)
    return GridFunction(tuple(out_half_widths), vals.reshape(res))


def commutator_at_identity(G: OsculatingGroup, f: GridFunction, g: GridFunction) -> complex:
    """``(f * g)(e) - (g * f)(e)``."""
    e = G.identity[None]
    return complex(convolve_at(G, f, g, e)[0] - convolve_at(G, g, f, e)[0])


def trace_engine(G: OsculatingGroup, k_P: GridFunction, k_Q: GridFunction, f: GridFunction,
                 g: GridFunction) -> complex:
    """``(k_P * g + f * k_Q - k_Q * f - g * k_P)(e)``."""
    e = G.identity[None]
    ev = lambda a, b: convolve_at(G, a, b, e)[0]
    return complex(ev(k_P, g) + ev(f, k_Q) - ev(k_Q, f) - ev(g, k_P))
