"""Operator spec files (YAML) and their resolved settings.

Example::

    grading: heisenberg(1,0)          # or trivial(d), or a weight list [2,1,1]
    operator: graded_norm_power(-4)   # catalog expression
    points: [[0, 0, 0]]               # base points; or random_points: 5
    quadrature: {sphere_degree: 60}
    s_set: [0.3333333333333333, 0.5, 2, 3]
    tolerance: 1.0e-3
    seed: 0
    cutoff: {r0: 0.5, r1: 1.0}
    format: json

Errors carry the line of the offending field.
"""
from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from .catalog import build_operator
from .errors import SpecError
from .graded import Grading

__all__ = ["Settings", "parse_spec", "load_spec", "parse_grading", "FORMATS"]

FORMATS = ("json", "csv", "text")
_KEYS = {"grading", "operator", "points", "random_points", "quadrature", "s_set", "tolerance", "seed",
         "cutoff", "format"}
_DEFAULT_S_SET = [1.0 / 3.0, 0.5, 2.0, 3.0]


@dataclass
class Settings:
    """Fully resolved run settings; ``to_dict`` output parses back to an equal object."""

    grading: list
    operator: str
    points: list
    sphere_degree: int
    s_set: list = field(default_factory=lambda: list(_DEFAULT_S_SET))
    tolerance: float = 1e-3
    seed: int = 0
    cutoff: dict = field(default_factory=lambda: {"r0": 0.5, "r1": 1.0})
    format: str = "json"

    @property
    def grading_obj(self) -> Grading:
        return Grading(tuple(self.grading))

    def to_dict(self) -> dict:
        d = asdict(self)
        return {
            "grading": list(d["grading"]),
            "operator": d["operator"],
            "points": [list(p) for p in d["points"]],
            "quadrature": {"sphere_degree": d["sphere_degree"]},
            "s_set": list(d["s_set"]),
            "tolerance": d["tolerance"],
            "seed": d["seed"],
            "cutoff": dict(d["cutoff"]),
            "format": d["format"],
        }


_PRESET = re.compile(r"^\s*(trivial|heisenberg)\s*\(\s*([0-9,\s]*)\)\s*$")


def parse_grading(value) -> Grading:
    if isinstance(value, str):
        m = _PRESET.match(value)
        if not m:
            raise ValueError(f"unknown grading {value!r} (expected trivial(d), heisenberg(n,m) or a weight list)")
        args = [int(a) for a in m.group(2).replace(" ", "").split(",") if a]
        if m.group(1) == "trivial":
            if len(args) != 1:
                raise ValueError("trivial(d) takes one argument")
            return Grading.trivial(args[0])
        if len(args) not in (1, 2):
            raise ValueError("heisenberg(n, m) takes one or two arguments")
        return Grading.heisenberg(*args)
    if isinstance(value, list) and value and all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        return Grading(tuple(value))
    raise ValueError(f"grading must be a preset string or a list of integers, got {value!r}")


def _line_map(text: str) -> dict:
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {k.value: k.start_mark.line + 1 for k, _ in node.value}


def parse_spec(text: str, overrides: dict | None = None) -> Settings:
    """Parse spec text into :class:`Settings`; raise :class:`SpecError` with line context."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise SpecError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                        line=None if mark is None else mark.line + 1) from exc
    if not isinstance(data, dict):
        raise SpecError("spec must be a mapping of fields", line=1)
    lines = _line_map(text)

    def fail(key, msg):
        raise SpecError(msg, line=lines.get(key), field=key)

    for key in data:
        if key not in _KEYS:
            fail(key, f"unknown field (known: {', '.join(sorted(_KEYS))})")
    for key in ("grading", "operator"):
        if key not in data:
            raise SpecError("required field missing", field=key)
    try:
        grading = parse_grading(data["grading"])
    except ValueError as exc:
        fail("grading", str(exc))
    if not isinstance(data["operator"], str):
        fail("operator", "operator must be a catalog expression string")
    try:
        build_operator(data["operator"], grading)
    except SpecError as exc:
        fail("operator", str(exc).split(": ", 1)[-1])

    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        fail("seed", "seed must be an integer")
    if "points" in data and "random_points" in data:
        fail("random_points", "give either points or random_points")
    if "random_points" in data:
        n = data["random_points"]
        if not isinstance(n, int) or n < 1:
            fail("random_points", "random_points must be a positive integer")
        rng = np.random.default_rng(seed)
        points = rng.uniform(-0.5, 0.5, size=(n, grading.dim)).round(12).tolist()
    else:
        points = data.get("points", [[0.0] * grading.dim])
        if not isinstance(points, list) or not points:
            fail("points", "points must be a non-empty list of coordinate lists")
        for p in points:
            if (not isinstance(p, list) or len(p) != grading.dim
                    or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)):
                fail("points", f"each point needs {grading.dim} numeric coordinates, got {p!r}")
        points = [[float(c) for c in p] for p in points]

    quad = data.get("quadrature", {}) or {}
    if not isinstance(quad, dict) or set(quad) - {"sphere_degree"}:
        fail("quadrature", "quadrature accepts only sphere_degree")
    default_degree = 4 if grading.is_trivial else 60
    degree = quad.get("sphere_degree", default_degree)
    if not isinstance(degree, int) or degree < 0:
        fail("quadrature", "sphere_degree must be a non-negative integer")

    s_set = data.get("s_set", list(_DEFAULT_S_SET))
    if (not isinstance(s_set, list) or not s_set
            or not all(isinstance(s, (int, float)) and s > 0 and s != 1 for s in s_set)):
        fail("s_set", "s_set must be a list of positive reals different from 1")
    tol = data.get("tolerance", 1e-3)
    if not isinstance(tol, (int, float)) or tol <= 0:
        fail("tolerance", "tolerance must be a positive number")
    cutoff = data.get("cutoff", {"r0": 0.5, "r1": 1.0})
    if not isinstance(cutoff, dict) or set(cutoff) != {"r0", "r1"} or not 0 < cutoff["r0"] < cutoff["r1"]:
        fail("cutoff", "cutoff needs 0 < r0 < r1")
    fmt = data.get("format", "json")
    if fmt not in FORMATS:
        fail("format", f"format must be one of {', '.join(FORMATS)}")

    settings = Settings(list(grading.weights), data["operator"], points, degree, [float(s) for s in s_set],
                        float(tol), seed, {"r0": float(cutoff["r0"]), "r1": float(cutoff["r1"])}, fmt)
    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(settings, key, value)
    return settings


def load_spec(path, overrides: dict | None = None) -> Settings:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc.strerror}") from exc
    return parse_spec(text, overrides)
