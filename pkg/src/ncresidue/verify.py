"""Verification suites over the built-in catalog.

Each check records the measured and expected values, the tolerance and the
outcome; a suite is a list of checks.  ``tol`` overrides every tolerance.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .catalog import build_operator, p0_profile
from .graded import Grading, sphere_quadrature
from .homog_dist import (
    ExtendedHomogeneousDistribution,
    bump,
    c0,
    cocycle_composition_defect,
    dilation_cocycle,
    ft_log,
    grafakos_decompose,
)
from .osculating import GridFunction, OsculatingGroup, commutator_at_identity, convolve_at, trace_engine
from .residue import (
    cocycle_at_zero,
    cocycle_homomorphism_check,
    groupoidal_residue_at,
    ponge_groupoidal_equiv,
    representative_invariance_check,
    wodzicki_residue_at,
)
from .symbols import HomogeneousTerm, PseudoHomogeneousTerm, kernel_term_to_symbol_term, norm_power_term

__all__ = ["Check", "SUITES", "run_suite"]


@dataclass
class Check:
    suite: str
    name: str
    measured: float
    expected: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _check(suite, name, measured, expected, tol, deviation=None, detail="") -> Check:
    """``deviation`` defaults to ``|measured - expected|``; pass iff deviation <= tol."""
    dev = abs(measured - expected) if deviation is None else deviation
    return Check(suite, name, float(np.real(measured)), float(np.real(expected)), float(tol),
                 bool(dev <= tol), detail or f"deviation {dev:.3e}")


def suite_ft(tol=None, seed=0, threads=1) -> list[Check]:
    out = []
    for d in (1, 2, 3):
        g = Grading.trivial(d)
        term = PseudoHomogeneousTerm(g, 0, None, norm_power_term(g, 0))
        direction = np.linspace(1.0, 0.3, d)
        direction /= np.linalg.norm(direction)
        for n in (1.0, 2.0, 4.0):
            xi = n * direction
            got = kernel_term_to_symbol_term(term, np.zeros(d), xi=xi).value
            want = ft_log(d, xi)
            t = tol if tol is not None else 1e-3
            out.append(_check("ft", f"FT log|z| d={d} |xi|={n:g}", got.real, want, t * abs(want),
                              detail=f"relative deviation {abs(got - want) / abs(want):.3e}"))
    profiles = {
        "d=2 cos(2 phi)": (2, lambda th: th[..., 0] ** 2 - th[..., 1] ** 2),
        "d=2 theta_1^3 + theta_2^2/2": (2, lambda th: th[..., 0] ** 3 + 0.5 * th[..., 1] ** 2),
        "d=3 theta_1^2 + theta_2 theta_3": (3, lambda th: th[..., 0] ** 2 + th[..., 1] * th[..., 2]),
    }
    for label, (d, prof) in profiles.items():
        g = Grading.trivial(d)
        f0 = HomogeneousTerm(g, 0, lambda x, z, p=prof: p(z / np.linalg.norm(z, axis=-1, keepdims=True)))
        dec = grafakos_decompose(f0)
        t = tol if tol is not None else 1e-3
        out.append(_check("ft", f"Omega mean zero {label}", abs(dec.mean), 0.0, t * dec.max_abs,
                          detail=f"|mean| {abs(dec.mean):.3e}, max|Omega| {dec.max_abs:.3e}"))
    return out


def _graded_u(z):
    return 1.0 / (z[..., 0] ** 2 + np.sum(z[..., 1:] ** 2, axis=-1) ** 2)


def suite_cocycle(tol=None, seed=0, threads=1) -> list[Check]:
    out = []
    phi = bump(1.0)
    dists = {
        "|xi|^-2 trivial(2)": (Grading.trivial(2), lambda z: 1.0 / np.sum(z * z, axis=-1)),
        "|xi|^-3 trivial(3)": (Grading.trivial(3), lambda z: np.sum(z * z, axis=-1) ** -1.5),
        "rho^-4 heisenberg(1)": (Grading.heisenberg(1), _graded_u),
    }
    for label, (g, u) in dists.items():
        dist = ExtendedHomogeneousDistribution(g, u)
        c = c0(u, sphere_quadrature(g.dim, 60), g)
        t = tol if tol is not None else 1e-4
        for s in (0.5, 2.0, 3.0):
            got = dilation_cocycle(dist, s, phi)
            want = s ** (-g.d_H) * math.log(s) * c * phi.value_at_zero
            out.append(_check("cocycle", f"dilation cocycle {label} s={s:g}", got.real, want.real,
                              t * (1.0 + abs(c)), deviation=abs(got - want)))
        defect = cocycle_composition_defect(dist, 2.0, 0.5 * 3.0, phi)
        out.append(_check("cocycle", f"cocycle composition {label}", abs(defect), 0.0, t * (1.0 + abs(c))))

    rng = np.random.default_rng(seed)
    for d in (1, 2, 3):
        P = build_operator("log_kernel(p0=wave)", Grading.trivial(d))
        x = rng.uniform(-0.5, 0.5, d)
        worst = 0.0
        for _ in range(20):
            s, tt = np.exp(rng.uniform(math.log(0.25), math.log(4.0), 2))
            Fs = cocycle_at_zero(P, x, s).limit
            worst = max(worst, cocycle_homomorphism_check(P, x, s, tt) / (1.0 + abs(Fs)))
        t = tol if tol is not None else 1e-8
        out.append(_check("cocycle", f"homomorphism F_st = F_s + F_t d={d}", worst, 0.0, t))
        worst = 0.0
        for _ in range(5):
            c = rng.uniform(-0.3, 0.3, d)
            a, w = rng.uniform(0.5, 10.0), rng.uniform(0.2, 1.0)
            h = lambda v, a=a, c=c, w=w: a * np.exp(-np.sum((v - c) ** 2, axis=-1) / w)
            worst = max(worst, representative_invariance_check(P, x, h))
        t = tol if tol is not None else 1e-6
        out.append(_check("cocycle", f"representative invariance d={d}", worst, 0.0, t))
    return out


def gaussian_bump(center, width):
    center = np.asarray(center, dtype=float)
    return lambda p: np.exp(-np.sum((p - center) ** 2, axis=-1) / width**2)


def suite_conv(tol=None, seed=0, threads=1, resolution=64) -> list[Check]:
    out = []
    G = OsculatingGroup.heisenberg(1)
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-0.5, 0.5, (4, 3))
    box = (4.0, 4.0, 4.0)
    t = tol if tol is not None else 1e-6
    errors = {}
    for n in (resolution // 2, resolution):
        fs = [GridFunction.sample(gaussian_bump(c, 0.5), box, n) for c in centers]
        scale = max(float(np.max(np.abs(f.values))) for f in fs) ** 2
        comm = commutator_at_identity(G, fs[0], fs[1])
        tr = trace_engine(G, fs[0], fs[1], fs[2], fs[3])
        a, b = centers[0], centers[1]
        exact = (math.pi * 0.25 / 2.0) ** 1.5 * math.exp(-np.sum((a + b) ** 2) / (2 * 0.25))
        errors[n] = abs(convolve_at(G, fs[0], fs[1], G.identity[None])[0] - exact)
        if n == resolution:
            out.append(_check("conv", f"[f,g](e) H_1 {n}^3", abs(comm), 0.0, t * scale))
            out.append(_check("conv", f"trace engine H_1 {n}^3", abs(tr), 0.0, t * scale))
    coarse, fine = errors[resolution // 2], errors[resolution]
    out.append(Check("conv", "grid refinement reduces (f*g)(e) error", fine, coarse, 0.0,
                     bool(fine < coarse or fine < 1e-13), f"errors {coarse:.3e} -> {fine:.3e}"))
    A = OsculatingGroup.abelian(2)
    f = GridFunction.sample(gaussian_bump((0.3, -0.2), 0.4), (5.0, 5.0), 64)
    g = GridFunction.sample(gaussian_bump((-0.1, 0.4), 0.6), (5.0, 5.0), 64)
    out.append(_check("conv", "abelian [f,g](e)", abs(commutator_at_identity(A, f, g)), 0.0, t))
    return out


def suite_equivalence(tol=None, seed=0, threads=1, points=5) -> list[Check]:
    out = []
    rng = np.random.default_rng(seed)
    for d in (1, 2, 3):
        g = Grading.trivial(d)
        catalog = ["log_kernel(p0=wave)", "homog0(odd)", "homog0(even)", "homog0(mixed)",
                   f"bessel_potential({-d})", f"bessel_potential({-d - 1})", f"norm_power({-d - 1})"]
        xs = rng.uniform(-0.5, 0.5, (points, d))
        for name in catalog:
            P = build_operator(name, g)
            worst, worst_exact = 0.0, 0.0
            for x in xs:
                w = wodzicki_residue_at(P, x)
                gr = groupoidal_residue_at(P, x)
                worst = max(worst, abs(w - gr.value) / (1.0 + abs(w)))
                if name.startswith("log_kernel"):
                    exact = -p0_profile("wave", d)[0](x[None])[0]
                    worst_exact = max(worst_exact, abs(w - exact), abs(gr.value - exact))
                elif name.startswith("homog0"):
                    worst_exact = max(worst_exact, abs(w), abs(gr.value))
            t = tol if tol is not None else 1e-3
            out.append(_check("equivalence", f"wodzicki = groupoidal {name} d={d}", worst, 0.0, t))
            if name.startswith(("log_kernel", "homog0")):
                t = tol if tol is not None else 1e-6
                label = "-p0(x)" if name.startswith("log") else "0"
                out.append(_check("equivalence", f"{name} d={d} residue = {label}", worst_exact, 0.0, t))
    H = Grading.heisenberg(1)
    for name in ("graded_norm_power(-4)", "graded_odd(-4)", "graded_norm_power(-4) + graded_odd(-4)"):
        rep = ponge_groupoidal_equiv(build_operator(name, H), np.zeros(3))
        t = tol if tol is not None else 1e-3
        out.append(_check("equivalence", f"ponge = groupoidal {name}", rep.relative_delta, 0.0, t))
        out.append(Check("equivalence", f"dilation cocycle certified {name}", float(rep.certified), 1.0, 0.0,
                         rep.certified, f"deltas {max(rep.certification_deltas.values()):.3e}"))
    return out


SUITES: dict[str, Callable[..., list[Check]]] = {
    "ft": suite_ft,
    "cocycle": suite_cocycle,
    "conv": suite_conv,
    "equivalence": suite_equivalence,
}


def run_suite(name: str, tol=None, seed: int = 0, threads: int = 1) -> tuple[list[Check], float]:
    names = list(SUITES) if name == "all" else [name]
    if any(n not in SUITES for n in names):
        raise KeyError(f"unknown suite {name!r}")
    start = time.perf_counter()
    checks = []
    for n in names:
        checks.extend(SUITES[n](tol=tol, seed=seed, threads=threads))
    return checks, time.perf_counter() - start
