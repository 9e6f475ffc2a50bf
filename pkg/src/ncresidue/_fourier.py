"""Polar-coordinate machinery for Fourier integrals of kernel terms.

In polar coordinates ``z = rho * theta`` the integral of ``k(z) e^{-i xi.z}``
splits into a radial integral of the angular transform

    A(r) = int_{S^(d-1)} g(theta) exp(-i r xhat.theta) dsigma(theta),

which is evaluated exactly from a finite harmonic expansion of ``g`` around
the axis ``xhat`` (Jacobi-Anger for d=2, Funk-Hecke for d>=3).  The radial
integral is done with composite Gauss-Legendre panels, geometrically refined
towards the origin where the kernel terms are singular.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import eval_gegenbauer, gammaln, jv, roots_jacobi, spherical_jn

from .graded import sphere_quadrature

# Coefficients below this fraction of the largest one are dropped.
_COEF_RTOL = 1e-13


@dataclass(frozen=True)
class AngularExpansion:
    """Harmonic coefficients of a function on S^(d-1) about a fixed axis."""

    d: int
    orders: np.ndarray
    coefficients: np.ndarray  # complex, already multiplied by the transform constants
    tail: float  # relative size of the discarded part of the expansion

    def transform(self, r) -> np.ndarray:
        """``A(r)`` for an array of non-negative radii."""
        r = np.asarray(r, dtype=float)
        if self.d == 1:
            # orders encode the two points: 0 -> +xhat, 1 -> -xhat
            c_plus, c_minus = self.coefficients
            return c_plus * np.exp(-1j * r) + c_minus * np.exp(1j * r)
        if len(self.orders) == 0:
            return np.zeros(r.shape, dtype=complex)
        lam = (self.d - 2) / 2.0
        out = np.zeros(r.shape, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.power(r, -lam) if lam > 0 else np.ones_like(r)
        half = self.d % 2 == 1
        for n, c in zip(self.orders, self.coefficients):
            if half:
                # J_(k+1/2)(r) = sqrt(2r/pi) j_k(r); far cheaper than jv at half-integer order
                out += c * spherical_jn(int(n + lam - 0.5), r)
            else:
                out += c * jv(n + lam, r)
        if half:
            out *= np.sqrt(2.0 * r / np.pi)
        out *= scale
        if lam > 0:
            small = r < 1e-300
            if np.any(small):
                # J_lam(r) r^-lam -> 1 / (2^lam Gamma(lam+1)); higher orders vanish
                lim = 0.0
                if 0 in set(self.orders.tolist()):
                    i0 = int(np.nonzero(self.orders == 0)[0][0])
                    lim = self.coefficients[i0] * np.exp(-lam * np.log(2.0) - gammaln(lam + 1.0))
                out[small] = lim
        return out


def frame(xhat: np.ndarray) -> np.ndarray:
    """Orthonormal basis whose first column is ``xhat``."""
    d = len(xhat)
    m = np.eye(d)
    m[:, 0] = xhat
    q, _ = np.linalg.qr(m)
    if q[:, 0] @ xhat < 0:
        q = -q
    return q


def angular_expansion(g, d: int, xhat: np.ndarray, n_max: int | None = None) -> AngularExpansion:
    """Expand ``g`` (vectorised over points on S^(d-1)) about the axis ``xhat``.

    The returned coefficients already carry the constants of the exact
    transform of each harmonic, so ``transform`` is a plain Bessel sum.
    """
    xhat = np.asarray(xhat, dtype=float)
    if d == 1:
        vals = np.asarray(g(np.array([xhat, -xhat])), dtype=complex)
        return AngularExpansion(1, np.array([0, 1]), vals, 0.0)
    if n_max is None:
        n_max = 64 if d <= 3 else 24
    q = frame(xhat)
    if d == 2:
        m = 2 * n_max
        phi = 2.0 * np.pi * np.arange(m) / m
        pts = np.outer(np.cos(phi), q[:, 0]) + np.outer(np.sin(phi), q[:, 1])
        c = np.fft.fft(np.asarray(g(pts), dtype=complex)) / m
        ns = np.rint(np.fft.fftfreq(m, 1.0 / m)).astype(int)
        # int_0^2pi e^{i n phi} e^{-i r cos phi} dphi = 2 pi (-i)^|n| J_|n|(r)
        orders = np.arange(n_max)
        coef = np.zeros(n_max, dtype=complex)
        np.add.at(coef, np.abs(ns[np.abs(ns) < n_max]), c[np.abs(ns) < n_max])
        coef *= 2.0 * np.pi * (-1j) ** orders
        return _truncate(2, orders, coef)
    lam = (d - 2) / 2.0
    a = lam - 0.5
    u, w = roots_jacobi(n_max + 8, a, a)
    inner = sphere_quadrature(d - 1, 2 * n_max if d == 3 else n_max)
    rad = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    pts = u[:, None, None] * q[:, 0][None, None, :] + rad[:, None, None] * (inner.nodes @ q[:, 1:].T)[None]
    vals = np.asarray(g(pts.reshape(-1, d)), dtype=complex).reshape(len(u), len(inner))
    slice_avg = vals @ inner.weights
    orders = np.arange(n_max)
    gegen = eval_gegenbauer(orders[None, :], lam, u[:, None])
    log_norm = (
        np.log(np.pi) + (1 - 2 * lam) * np.log(2.0) + gammaln(orders + 2 * lam)
        - gammaln(orders + 1.0) - np.log(orders + lam) - 2 * gammaln(lam)
    )
    coef = ((w * slice_avg) @ gegen) / np.exp(log_norm)
    # Funk-Hecke: int e^{-iru} C_n(u) (1-u^2)^(lam-1/2) du
    #   = pi 2^(1-lam) Gamma(n+2lam) / (n! Gamma(lam)) (-i)^n J_(n+lam)(r) r^-lam
    log_fh = np.log(np.pi) + (1 - lam) * np.log(2.0) + gammaln(orders + 2 * lam) - gammaln(orders + 1.0) - gammaln(lam)
    coef = coef * np.exp(log_fh) * (-1j) ** orders
    return _truncate(d, orders, coef)


def _truncate(d, orders, coef) -> AngularExpansion:
    mag = np.abs(coef)
    top = mag.max() if len(mag) else 0.0
    if top == 0.0:
        return AngularExpansion(d, orders[:0], coef[:0], 0.0)
    keep = mag > _COEF_RTOL * top
    last = int(np.nonzero(keep)[0][-1]) + 1
    # the last few retained coefficients measure how well the expansion converged
    tail = float(mag[max(last - 4, 0):last].max() / top) if last == len(coef) else 0.0
    sel = keep[:last]
    return AngularExpansion(d, orders[:last][sel], coef[:last][sel], tail)


def radial_panels(
    r_max: float, freq: float, order: int = 20, per_panel: float = 2.0, levels: int = 40,
    max_width: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on ``[0, r_max]``.

    Uniform panels cover ``per_panel`` radians of ``exp(i freq r)`` each; the
    first panel is split geometrically ``levels`` times towards 0 so that
    log and power singularities at the origin are integrated accurately.
    ``max_width`` additionally caps the panel width (for integrands with
    their own length scale).
    """
    h = per_panel / max(freq, 1e-12)
    if max_width is not None:
        h = min(h, max_width)
    n = max(int(np.ceil(r_max / h)), 1)
    h = r_max / n
    edges = np.concatenate([[0.0], h * 2.0 ** -np.arange(levels, 0, -1), h * np.arange(1, n + 1)])
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1], edges[1:]
    nodes = (0.5 * (b - a)[:, None] * x + 0.5 * (b + a)[:, None]).ravel()
    weights = (0.5 * (b - a)[:, None] * w).ravel()
    return nodes, weights
