"""Numpy implementation of the group-convolution kernel (same contract as ``_kernels``)."""
from __future__ import annotations

import itertools

import numpy as np


def _interp(g: np.ndarray, z: np.ndarray, origin, spacing, shape) -> np.ndarray:
    u = (z - origin) / spacing
    inside = np.all((u >= 0.0) & (u <= shape - 1), axis=-1)
    base = np.clip(np.floor(u).astype(np.int64), 0, shape - 2)
    frac = u - base
    out = np.zeros(z.shape[:-1], dtype=complex)
    strides = np.append(np.cumprod(shape[::-1])[-2::-1], 1)
    for corner in itertools.product((0, 1), repeat=len(shape)):
        c = np.asarray(corner)
        w = np.prod(np.where(c == 1, frac, 1.0 - frac), axis=-1)
        idx = np.sum((base + c) * strides, axis=-1)
        idx = np.where(inside, idx, 0)
        out += w * g[idx]
    return np.where(inside, out, 0.0)


def convolve_at(heisenberg, n, ys, fw_re, fw_im, g_re, g_im, origin, spacing, shape, xs, chunk=64):
    ys = np.asarray(ys, dtype=float)
    xs = np.asarray(xs, dtype=float)
    fw = np.asarray(fw_re) + 1j * np.asarray(fw_im)
    g = np.asarray(g_re) + 1j * np.asarray(g_im)
    origin, spacing = np.asarray(origin, float), np.asarray(spacing, float)
    shape = np.asarray(shape, dtype=np.int64)
    out = np.zeros(len(xs), dtype=complex)
    for start in range(0, len(xs), chunk):
        x = xs[start:start + chunk]
        z = x[:, None, :] - ys[None, :, :]
        if heisenberg:
            yx, yy = ys[:, 1:1 + n], ys[:, 1 + n:1 + 2 * n]
            xx, xy = x[:, 1:1 + n], x[:, 1 + n:1 + 2 * n]
            z[..., 0] += 0.5 * (xx @ yy.T - xy @ yx.T)
        out[start:start + chunk] = _interp(g, z, origin, spacing, shape) @ fw
    return out
