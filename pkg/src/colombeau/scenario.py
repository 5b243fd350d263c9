"""Scenario files: a strict YAML schema with a small constructor language.

A scenario names a domain, a ladder, optional tolerance overrides, objects
built from constructor strings, symbols and a task list::

    domain: {dimension: 1, box: [[-4, 4]], points: 1024}
    ladder: {kmin: 2, kmax: 18}
    objects:
      d0: delta(0)
      H: heaviside(0)
      T: sum(d0, density(exp(-x^2)))
    symbols:
      A: {expr: "i*xi", order: 1}
    tasks:
      - {id: wf-d0, type: wavefront, object: d0, cells: 16}

Functional constructors: ``delta(x0)``, ``ddelta(x0, alpha)``,
``integrate(box)``, ``density(expr[, box])``, ``heaviside(a[, sign])``,
``scale(p, F)`` (eps^p F), ``sum(F1, F2, ...)``, ``derivative(F, alpha)``,
``multiply(u, F)``.  Net constructors: ``net(expr)``, ``smooth(expr)``,
``mollifier(q)`` (rho at scale eps^q) and ``regularize(F, q)``.  Arguments
may name objects defined earlier in the file.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field as dc_field

import numpy as np
import yaml

from . import dual
from .asymptotics import DEFAULT_TOLERANCES, EpsilonLadder, Tolerances
from .errors import ColombeauError, ExpressionSyntaxError, ScenarioParseError, ScenarioValidationError
from .expr import parse
from .fields import ScaledField
from .genfun import CellGrid, Grid, RepresentativeNet, embed_smooth, net_from_expression, net_from_field
from .microlocal import Cone
from .mollifier import Mollifier
from .psido import HARNESS_CASES, SymbolNet

__all__ = ["Scenario", "load_scenario", "parse_scenario", "TASK_TYPES", "FUNCTIONAL", "NET"]

FUNCTIONAL = "functional"
NET = "net"

TASK_TYPES = ("classify", "wavefront", "singsupp", "regularize", "psido-apply", "certify-symbol", "theorem-check")

_TOP_KEYS = {"domain", "ladder", "tolerances", "objects", "symbols", "tasks", "output"}
_DOMAIN_KEYS = {"dimension", "box", "points", "periodic"}
_LADDER_KEYS = {"kmin", "kmax", "anchor", "ratio", "count"}
_SYMBOL_KEYS = {"expr", "order", "rho", "delta", "regular", "slow_scale"}

_TASK_KEYS = {
    "classify": {"object", "K", "q_max", "max_order"},
    "wavefront": {"object", "cells", "mode", "cones", "radii", "l_grid", "name"},
    "singsupp": {"object", "cells", "mode", "compare_projection"},
    "regularize": {"object", "q", "probes", "radius"},
    "psido-apply": {"symbol", "object", "chi", "cells", "K", "define"},
    "certify-symbol": {"symbol", "checks", "region", "cone", "K", "l", "cells", "mode", "xi_top", "steps", "xi_factor"},
    "theorem-check": {"case", "object", "symbol", "cells", "modes", "chi", "A", "P", "u", "K"},
}
_CHECKS = ("class", "micro_ellipticity", "hypoelliptic", "micro_support")
DEFAULT_PROBES_1D = ("exp(-x^2)", "exp(-x^2)*cos(2*x)", "exp(-(x-0.5)^2)", "x*exp(-x^2)", "exp(-x^2)*exp(sin(3*x))")
DEFAULT_PROBES_2D = ("exp(-x^2-y^2)", "exp(-x^2-y^2)*cos(x+2*y)", "x*y*exp(-x^2-y^2)")


# ------------------------------------------------------------- yaml layer

def _marks(node, path=(), out=None):
    """Map key paths to the start mark of their value node."""
    out = {} if out is None else out
    out[path] = node.start_mark
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _marks(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _marks(v, path + (i,), out)
    return out


class _UniqueKeyLoader(yaml.SafeLoader):
    pass


def _no_duplicates(loader, node, deep=False):
    seen = set()
    for k, _ in node.value:
        key = loader.construct_object(k, deep=deep)
        if key in seen:
            m = k.start_mark
            raise ScenarioParseError(f"duplicate key {key!r}", m.line + 1, m.column + 1)
        seen.add(key)
    return loader.construct_mapping(node, deep)


_UniqueKeyLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _no_duplicates)


def _load_yaml(text: str):
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.load(text, Loader=_UniqueKeyLoader)
    except yaml.MarkedYAMLError as exc:
        m = exc.problem_mark or exc.context_mark
        line, col = (m.line + 1, m.column + 1) if m is not None else (0, 0)
        raise ScenarioParseError(exc.problem or str(exc), line, col) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioParseError("a scenario must be a mapping", 1, 1)
    return data, (_marks(root) if root is not None else {})


# ---------------------------------------------------------- constructor DSL

_NAME_RE = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*)\s*\(")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*$")


class _DslError(Exception):
    def __init__(self, message, offset):
        super().__init__(message)
        self.offset = offset


def _split_call(text: str, base: int = 0):
    """``name(arg, ...)`` -> (name, [(arg text, offset)])."""
    m = _NAME_RE.match(text)
    if not m:
        raise _DslError("expected a constructor call name(...)", base)
    name = m.group(1)
    depth = 0
    args, start = [], m.end()
    start_args = m.end()
    for i in range(m.end(), len(text)):
        ch = text[i]
        if ch in "([":
            depth += 1
        elif ch in ")]":
            if depth == 0:
                if ch != ")":
                    raise _DslError("unbalanced bracket", base + i)
                if text[i + 1:].strip():
                    raise _DslError("unexpected text after constructor", base + i + 1)
                last = text[start:i]
                if last.strip() or args:
                    args.append(last)
                out, pos = [], base + start_args
                for a in args:
                    lead = len(a) - len(a.lstrip())
                    out.append((a.strip(), pos + lead))
                    pos += len(a) + 1
                return name, out
            depth -= 1
        elif ch == "," and depth == 0:
            args.append(text[start:i])
            start = i + 1
    raise _DslError("missing closing parenthesis", base + len(text))


def _number(arg, pos) -> float:
    try:
        v = yaml.safe_load(arg)
    except yaml.YAMLError:
        v = None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        try:
            return float(parse(arg).sym.evalf())
        except (ExpressionSyntaxError, TypeError, ValueError):
            raise _DslError(f"expected a number, got {arg!r}", pos) from None
    return float(v)


def _literal(arg, pos):
    try:
        return yaml.safe_load(arg)
    except yaml.YAMLError:
        raise _DslError(f"cannot read {arg!r}", pos) from None


def _box_arg(arg, pos, n):
    v = _literal(arg, pos)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        v = [v]
    if not (isinstance(v, list) and len(v) == n and all(isinstance(b, list) and len(b) == 2 for b in v)):
        raise _DslError(f"expected a box like [a, b] or [[a, b], [c, d]], got {arg!r}", pos)
    return tuple((float(a), float(b)) for a, b in v)


def _point_arg(arg, pos, n):
    v = _literal(arg, pos)
    if isinstance(v, (int, float)) and not isinstance(v, bool) and n == 1:
        return float(v)
    if isinstance(v, list) and len(v) == n:
        return tuple(float(t) for t in v)
    return _number(arg, pos) if n == 1 else _fail(f"expected a point with {n} coordinates", pos)


def _alpha_arg(arg, pos, n):
    v = _literal(arg, pos)
    if isinstance(v, int) and n == 1:
        return (v,)
    if isinstance(v, list) and len(v) == n and all(isinstance(t, int) for t in v):
        return tuple(v)
    raise _DslError(f"expected a multi-index of length {n}, got {arg!r}", pos)


def _fail(message, pos):
    raise _DslError(message, pos)


class _Builder:
    """Evaluates constructor strings against the domain and earlier objects."""

    def __init__(self, grid: Grid, ladder: EpsilonLadder, objects: dict):
        self.grid = grid
        self.ladder = ladder
        self.objects = objects
        self.n = grid.dimension

    def build(self, text: str, base: int = 0):
        text = str(text)
        if _IDENT_RE.match(text.strip()):
            return self._ref(text.strip(), base + len(text) - len(text.lstrip()))
        name, args = _split_call(text, base)
        fn = getattr(self, "_c_" + name, None)
        if fn is None:
            raise _DslError(f"unknown constructor {name!r}", base + len(text) - len(text.lstrip()))
        return fn(args, base)

    def _ref(self, name, pos):
        if name not in self.objects:
            raise ScenarioValidationError(f"undefined object {name!r}", f"offset {pos}")
        return self.objects[name]

    def _sub(self, arg, pos, kind=None):
        obj = self.build(arg, pos)
        if kind is not None and obj[0] != kind:
            raise ScenarioValidationError(f"{arg!r} is a {obj[0]}, expected a {kind}")
        return obj

    def _expr(self, arg, pos):
        try:
            parse(arg, self.n)
        except ExpressionSyntaxError as exc:
            raise _DslError(str(exc).rsplit(" at column", 1)[0], pos + exc.position) from None
        return arg

    def _nargs(self, args, lo, hi, name, base):
        if not lo <= len(args) <= hi:
            want = str(lo) if lo == hi else f"{lo} to {hi}"
            raise _DslError(f"{name} takes {want} arguments, got {len(args)}", base)

    # -- functionals ----------------------------------------------------------
    def _c_delta(self, args, base):
        self._nargs(args, 1, 1, "delta", base)
        x0 = _point_arg(*args[0], self.n)
        return FUNCTIONAL, dual.atom(x0, (0,) * self.n, self.ladder, dimension=self.n)

    def _c_ddelta(self, args, base):
        self._nargs(args, 2, 2, "ddelta", base)
        x0 = _point_arg(*args[0], self.n)
        alpha = _alpha_arg(*args[1], self.n)
        if self.n == 1:
            return FUNCTIONAL, dual.ddelta(x0, alpha, self.ladder)
        sign = (-1) ** sum(alpha)
        return FUNCTIONAL, dual.atom(x0, alpha, self.ladder, coeff=sign, dimension=self.n)

    def _c_integrate(self, args, base):
        self._nargs(args, 1, 1, "integrate", base)
        return FUNCTIONAL, dual.integrate(_box_arg(*args[0], self.n), self.ladder)

    def _c_density(self, args, base):
        self._nargs(args, 1, 2, "density", base)
        expr = self._expr(*args[0])
        box = _box_arg(*args[1], self.n) if len(args) > 1 else self.grid.box
        T = dual.density(expr, self.ladder, box=box, dimension=self.n)
        return FUNCTIONAL, T

    def _c_heaviside(self, args, base):
        self._nargs(args, 1, 2, "heaviside", base)
        if self.n != 1:
            raise _DslError("heaviside is one-dimensional", base)
        a = _number(*args[0])
        sign = int(_number(*args[1])) if len(args) > 1 else 1
        return FUNCTIONAL, dual.heaviside(a, self.ladder, sign=sign, domain=self.grid.box)

    def _c_scale(self, args, base):
        self._nargs(args, 2, 2, "scale", base)
        p = _number(*args[0])
        _, T = self._sub(*args[1], FUNCTIONAL)
        return FUNCTIONAL, T.eps_power(p)

    def _c_sum(self, args, base):
        if not args:
            raise _DslError("sum needs at least one argument", base)
        Ts = [self._sub(a, p, FUNCTIONAL)[1] for a, p in args]
        return FUNCTIONAL, dual.functional_sum(*Ts)

    def _c_derivative(self, args, base):
        self._nargs(args, 2, 2, "derivative", base)
        _, T = self._sub(*args[0], FUNCTIONAL)
        return FUNCTIONAL, T.derivative(_alpha_arg(*args[1], self.n))

    def _c_multiply(self, args, base):
        self._nargs(args, 2, 2, "multiply", base)
        _, u = self._sub(*args[0], NET)
        _, T = self._sub(*args[1], FUNCTIONAL)
        return FUNCTIONAL, dual.multiply(u, T)

    # -- nets -------------------------------------------------------------------
    def _c_net(self, args, base):
        self._nargs(args, 1, 1, "net", base)
        return NET, net_from_expression(self._expr(*args[0]), self.grid, self.ladder)

    def _c_smooth(self, args, base):
        self._nargs(args, 1, 1, "smooth", base)
        expr = self._expr(*args[0])
        try:
            return NET, embed_smooth(expr, self.grid, self.ladder)
        except ValueError as exc:
            raise ScenarioValidationError(str(exc)) from None

    def _c_mollifier(self, args, base):
        self._nargs(args, 0, 1, "mollifier", base)
        q = _number(*args[0]) if args else 1.0
        rho = Mollifier(self.n)
        f = ScaledField(rho.profile, (0.0,) * self.n, q)
        return NET, net_from_field(f, self.grid, self.ladder, name=f"mollifier({q:g})")

    def _c_regularize(self, args, base):
        self._nargs(args, 1, 2, "regularize", base)
        _, T = self._sub(*args[0], FUNCTIONAL)
        q = _number(*args[1]) if len(args) > 1 else 1.0
        return NET, dual.regularize(T, Mollifier(self.n), q, self.grid)


# ------------------------------------------------------------------ scenario

@dataclass
class Scenario:
    """A validated scenario, ready to run."""

    grid: Grid
    ladder: EpsilonLadder
    tolerances: Tolerances
    objects: dict  # name -> (kind, object)
    sources: dict  # name -> constructor text
    symbols: dict  # name -> SymbolNet
    tasks: list  # validated task dicts
    output: str | None = None
    overrides: dict = dc_field(default_factory=dict)

    def metadata(self) -> dict:
        return {
            "domain": {
                "dimension": self.grid.dimension,
                "box": [list(b) for b in self.grid.box],
                "points": self.grid.points,
                "periodic": self.grid.periodic,
            },
            "ladder": {
                "anchor": self.ladder.anchor,
                "ratio": self.ladder.ratio,
                "count": self.ladder.count,
                "values": [float(v) for v in self.ladder.values],
            },
            "tolerances": self.tolerances.as_dict(),
            "tolerance_overrides": dict(sorted(self.overrides.items())),
            "objects": dict(sorted(self.sources.items())),
            "symbols": {k: v.as_dict() for k, v in sorted(self.symbols.items())},
        }


def _where(marks, path, offset=0):
    m = marks.get(tuple(path))
    if m is None:
        return 0, 0
    return m.line + 1, m.column + 1 + offset


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ScenarioValidationError("expected a mapping", where)
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ScenarioValidationError(f"unknown keys {unknown}", where)


def _grid(d) -> Grid:
    d = d or {}
    _check_keys(d, _DOMAIN_KEYS, "domain")
    n = d.get("dimension", 1)
    box = d.get("box", [[-4, 4]] * n)
    points = d.get("points", 1024 if n == 1 else 128)
    try:
        return Grid(int(n), tuple(tuple(b) for b in box), int(points), bool(d.get("periodic", True)))
    except (TypeError, ValueError) as exc:
        raise ScenarioValidationError(str(exc), "domain") from None


def _ladder(d) -> EpsilonLadder:
    d = d or {}
    _check_keys(d, _LADDER_KEYS, "ladder")
    try:
        if {"kmin", "kmax"} & set(d):
            if {"anchor", "ratio", "count"} & set(d):
                raise ValueError("give either kmin/kmax or anchor/ratio/count")
            return EpsilonLadder.dyadic(int(d.get("kmin", 2)), int(d.get("kmax", 18)))
        return EpsilonLadder(float(d.get("anchor", 0.25)), float(d.get("ratio", 0.5)), int(d.get("count", 17)))
    except (TypeError, ValueError) as exc:
        raise ScenarioValidationError(str(exc), "ladder") from None


def _tolerances(d):
    d = d or {}
    if not isinstance(d, dict):
        raise ScenarioValidationError("expected a mapping", "tolerances")
    try:
        return DEFAULT_TOLERANCES.override(**{k: float(v) for k, v in d.items()}), {k: float(v) for k, v in d.items()}
    except (TypeError, ValueError, KeyError) as exc:
        raise ScenarioValidationError(str(exc).strip('"'), "tolerances") from None


def _symbol(name, spec, n) -> SymbolNet:
    where = f"symbol {name}"
    if isinstance(spec, (str, int, float)):
        spec = {"expr": str(spec)}
    _check_keys(spec, _SYMBOL_KEYS, where)
    if "expr" not in spec:
        raise ScenarioValidationError("missing 'expr'", where)
    kw = {k: spec[k] for k in ("order", "rho", "delta", "regular", "slow_scale") if k in spec}
    try:
        return SymbolNet(str(spec["expr"]), dimension=n, name=name, **kw)
    except (TypeError, ValueError) as exc:
        raise ScenarioValidationError(str(exc), where) from None


def _cells(value, grid: Grid, where) -> CellGrid:
    n = grid.dimension
    if isinstance(value, int) and not isinstance(value, bool):
        return CellGrid(grid.box, (value,) * n)
    if isinstance(value, dict):
        _check_keys(value, {"box", "counts"}, where + ".cells")
        box = tuple(tuple(float(t) for t in b) for b in value.get("box", grid.box))
        counts = value.get("counts", 16)
        counts = tuple(counts) if isinstance(counts, list) else (int(counts),) * n
        if not grid.contains_box(box):
            raise ScenarioValidationError(f"cell box {box} leaves the domain {grid.box}", where)
        try:
            return CellGrid(box, counts)
        except (TypeError, ValueError) as exc:
            raise ScenarioValidationError(str(exc), where) from None
    raise ScenarioValidationError("cells must be a count or {box, counts}", where)


def _box(value, n, where):
    try:
        v = value
        if len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
            v = [v]
        box = tuple((float(a), float(b)) for a, b in v)
    except (TypeError, ValueError):
        raise ScenarioValidationError(f"bad box {value!r}", where) from None
    if len(box) != n or any(b < a for a, b in box):
        raise ScenarioValidationError(f"bad box {value!r}", where)
    return box


def _cone(value, n, where) -> Cone | None:
    if value is None or value == "full":
        return Cone.full(n)
    if isinstance(value, dict):
        _check_keys(value, {"direction", "half_angle"}, where + ".cone")
        half = float(value.get("half_angle", math.pi / 2 if n == 1 else math.pi / 8))
        return Cone(float(value.get("direction", 1.0)), half, n)
    if n == 1 and value in ("+", "-"):
        return Cone(1.0 if value == "+" else -1.0, math.pi / 2, 1)
    raise ScenarioValidationError(f"bad cone {value!r}", where)


def _task(t, idx, scen_objects, symbols, grid, seen_ids, wf_names):
    if not isinstance(t, dict):
        raise ScenarioValidationError("a task must be a mapping", f"task #{idx}")
    tid = t.get("id")
    if not isinstance(tid, str) or not tid:
        raise ScenarioValidationError("every task needs a string 'id'", f"task #{idx}")
    if tid in seen_ids:
        raise ScenarioValidationError("duplicate task id", f"task {tid}")
    seen_ids.add(tid)
    where = f"task {tid}"
    ttype = t.get("type")
    if ttype not in TASK_TYPES:
        raise ScenarioValidationError(f"unknown type {ttype!r}; expected one of {list(TASK_TYPES)}", where)
    _check_keys(t, _TASK_KEYS[ttype] | {"id", "type"}, where)
    n = grid.dimension
    out = {"id": tid, "type": ttype}

    def obj(key, kind=None, required=True):
        name = t.get(key)
        if name is None:
            if required:
                raise ScenarioValidationError(f"missing '{key}'", where)
            return None
        if name not in scen_objects:
            raise ScenarioValidationError(f"undefined object {name!r}", where)
        if kind is not None and scen_objects[name][0] != kind:
            raise ScenarioValidationError(f"object {name!r} is a {scen_objects[name][0]}, expected a {kind}", where)
        out[key] = name
        return name

    def sym(key, required=True):
        name = t.get(key)
        if name is None:
            if required:
                raise ScenarioValidationError(f"missing '{key}'", where)
            return None
        if name not in symbols:
            raise ScenarioValidationError(f"undefined symbol {name!r}", where)
        out[key] = name
        return name

    def choice(key, options, default):
        v = t.get(key, default)
        if v not in options:
            raise ScenarioValidationError(f"{key} must be one of {list(options)}", where)
        out[key] = v
        return v

    def cells(required=True):
        if "cells" not in t:
            if required:
                raise ScenarioValidationError("missing 'cells'", where)
            return None
        out["cells"] = _cells(t["cells"], grid, where)
        return out["cells"]

    def number_list(key, default):
        v = t.get(key, default)
        if v is None:
            out[key] = None
            return None
        if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v) or not v:
            raise ScenarioValidationError(f"{key} must be a non-empty list of numbers", where)
        out[key] = tuple(float(x) for x in v)
        return out[key]

    if ttype == "classify":
        obj("object", NET)
        out["K"] = _box(t["K"], n, where) if "K" in t else None
        out["q_max"] = float(t["q_max"]) if "q_max" in t else None
        mo = t.get("max_order", 4)
        if not isinstance(mo, int) or not 0 <= mo <= 4:
            raise ScenarioValidationError("max_order must be an integer in 0..4", where)
        out["max_order"] = mo
    elif ttype == "wavefront":
        name = obj("object", FUNCTIONAL)
        cells()
        choice("mode", ("G", "Ginf", "joint"), "joint")
        out["radii"] = number_list("radii", None)
        out["l_grid"] = number_list("l_grid", [0, 2, 4, 8])
        cones = t.get("cones")
        if cones is not None and not (isinstance(cones, int) and n == 2 and cones >= 1):
            raise ScenarioValidationError("cones (a count) is only configurable in 2D", where)
        out["cones"] = cones
        stem = str(t.get("name", name))
        if not re.match(r"^[A-Za-z0-9_.-]+$", stem):
            raise ScenarioValidationError(f"bad file name stem {stem!r}", where)
        if stem in wf_names:
            raise ScenarioValidationError(f"wf_{stem}.json is written by two tasks; set 'name'", where)
        wf_names.add(stem)
        out["name"] = stem
    elif ttype == "singsupp":
        obj("object", FUNCTIONAL)
        cells()
        choice("mode", ("G", "Ginf", "both"), "both")
        out["compare_projection"] = bool(t.get("compare_projection", False))
    elif ttype == "regularize":
        obj("object", FUNCTIONAL)
        q = number_list("q", [1, 2, 3, 4])
        if any(v <= 0 for v in q):
            raise ScenarioValidationError("q values must be positive", where)
        probes = t.get("probes", list(DEFAULT_PROBES_1D if n == 1 else DEFAULT_PROBES_2D))
        if not isinstance(probes, list) or not probes:
            raise ScenarioValidationError("probes must be a list of expressions", where)
        for p in probes:
            try:
                parse(str(p), n)
            except ExpressionSyntaxError as exc:
                raise ScenarioValidationError(f"probe {p!r}: {exc}", where) from None
        out["probes"] = [str(p) for p in probes]
        out["radius"] = float(t.get("radius", 1.0))
    elif ttype == "psido-apply":
        sym("symbol")
        name = obj("object")
        kind = scen_objects[name][0]
        chi = t.get("chi")
        if chi is not None:
            if not isinstance(chi, dict):
                raise ScenarioValidationError("chi must be {center, radius}", where)
            _check_keys(chi, {"center", "radius"}, where + ".chi")
            out["chi"] = (chi.get("center", [0.0] * n), float(chi["radius"]))
        else:
            out["chi"] = None
        if kind == FUNCTIONAL:
            cells(required=False)
        out["K"] = _box(t["K"], n, where) if "K" in t else None
        define = t.get("define")
        if define is not None:
            if not isinstance(define, str) or not _IDENT_RE.match(define) or define in scen_objects:
                raise ScenarioValidationError(f"cannot define object {define!r}", where)
            scen_objects[define] = (kind, None)
        out["define"] = define
    elif ttype == "certify-symbol":
        sym("symbol")
        checks = t.get("checks", list(_CHECKS))
        if not isinstance(checks, list) or any(c not in _CHECKS for c in checks):
            raise ScenarioValidationError(f"checks must be a subset of {list(_CHECKS)}", where)
        out["checks"] = checks
        out["region"] = _box(t["region"], n, where) if "region" in t else grid.box
        out["cone"] = _cone(t.get("cone"), n, where)
        out["K"] = _box(t["K"], n, where) if "K" in t else out["region"]
        out["l"] = float(t["l"]) if "l" in t else None
        if "micro_support" in checks:
            cells()
        choice("mode", ("G", "Ginf"), "G")
        for key, default in (("xi_top", 2.0**12), ("steps", 4), ("xi_factor", 2.0**10)):
            v = t.get(key, default)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
                raise ScenarioValidationError(f"{key} must be positive", where)
            out[key] = int(v) if key == "steps" else float(v)
        if out["xi_top"] <= 1:
            raise ScenarioValidationError("xi_top must exceed 1", where)
    elif ttype == "theorem-check":
        case = choice("case", HARNESS_CASES, None)
        if case == "parametrix_identity":
            sym("A")
            sym("P")
            obj("u", NET)
            out["K"] = _box(t["K"], n, where) if "K" in t else None
        else:
            obj("object", FUNCTIONAL)
            cells()
            if case != "projection":
                sym("symbol")
            modes = t.get("modes", ["G", "Ginf"])
            if not isinstance(modes, list) or not modes or any(m not in ("G", "Ginf") for m in modes):
                raise ScenarioValidationError("modes must be a list from [G, Ginf]", where)
            out["modes"] = tuple(modes)
            chi = t.get("chi")
            if chi is not None:
                if not isinstance(chi, dict):
                    raise ScenarioValidationError("chi must be {center, radius}", where)
                _check_keys(chi, {"center", "radius"}, where + ".chi")
                out["chi"] = (chi.get("center", [0.0] * n), float(chi["radius"]))
            else:
                out["chi"] = None
    return out


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario text.

    Raises
    ------
    ScenarioParseError
        Malformed YAML or constructor/expression syntax (with line, column).
    ScenarioValidationError
        Unknown keys, undefined references or invalid parameters.
    """
    data, marks = _load_yaml(text)
    _check_keys(data, _TOP_KEYS, "scenario")
    grid = _grid(data.get("domain"))
    ladder = _ladder(data.get("ladder"))
    tol, overrides = _tolerances(data.get("tolerances"))
    objects, sources = {}, {}
    raw_objects = data.get("objects") or {}
    if not isinstance(raw_objects, dict):
        raise ScenarioValidationError("expected a mapping of name: constructor", "objects")
    builder = _Builder(grid, ladder, objects)
    for name, text_ in raw_objects.items():
        if not isinstance(name, str) or not _IDENT_RE.match(name):
            raise ScenarioValidationError(f"bad object name {name!r}", "objects")
        if not isinstance(text_, (str, int, float)):
            raise ScenarioValidationError("constructor must be a string", f"object {name}")
        path = ("objects", name)
        quoted = 1 if marks.get(path) is not None and marks[path].buffer is not None and text[marks[path].index:marks[path].index + 1] in "'\"" else 0
        try:
            objects[name] = builder.build(str(text_))
        except _DslError as exc:
            line, col = _where(marks, path, exc.offset + quoted)
            raise ScenarioParseError(f"object {name}: {exc}", line, col) from None
        except ScenarioValidationError as exc:
            raise ScenarioValidationError(str(exc).split(": ", 1)[-1], f"object {name}") from None
        except (ColombeauError, ValueError, TypeError, NotImplementedError) as exc:
            raise ScenarioValidationError(str(exc), f"object {name}") from None
        sources[name] = str(text_)
    symbols = {}
    raw_symbols = data.get("symbols") or {}
    if not isinstance(raw_symbols, dict):
        raise ScenarioValidationError("expected a mapping", "symbols")
    for name, spec in raw_symbols.items():
        try:
            symbols[name] = _symbol(name, spec, grid.dimension)
        except ExpressionSyntaxError as exc:
            path = ("symbols", name) if not isinstance(spec, dict) else ("symbols", name, "expr")
            line, col = _where(marks, path, exc.position)
            raise ScenarioParseError(f"symbol {name}: {exc}", line, col) from None
    raw_tasks = data.get("tasks") or []
    if not isinstance(raw_tasks, list):
        raise ScenarioValidationError("expected a list", "tasks")
    visible = dict(objects)
    seen, wf_names = set(), set()
    tasks = [_task(t, i, visible, symbols, grid, seen, wf_names) for i, t in enumerate(raw_tasks)]
    output = data.get("output")
    if output is not None and not isinstance(output, str):
        raise ScenarioValidationError("output must be a path string", "output")
    return Scenario(grid, ladder, tol, objects, sources, symbols, tasks, output, overrides)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
