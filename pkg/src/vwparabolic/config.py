"""YAML run configuration.

An empty document runs case 1 with theta = 1 on the default epsilon
ladder.  A full document looks like::

    problem:
      case: 4              # built-in case, or give the terms inline
      location: 0.6        # moves the case's delta
      T: 1.0
    scheme:
      theta: 1.0
    grid:
      nx: auto             # or an integer; auto honours h <= eps/4
      nt: auto
      x_refine: 1
    epsilons: [0.3, 0.1, 0.05, 0.031, 0.003]
    net: exp               # or cosine
    outputs:
      snapshots: [0, 0.125, 0.25, 0.5, 1]
      directory: out
      plots: true

Inline problems list terms per coefficient.  A number is a constant; a
mapping holds exactly one of ``constant``, ``delta``, ``heaviside`` or
``smooth`` (an expression in ``x`` or ``t`` using numpy functions)::

    problem:
      a: [1, {delta: 0.45}]
      b: [{smooth: "1 + 0.5*sin(2*pi*t)", axis: t}]
      f: [{time: {smooth: "exp(-t)"}, space: {smooth: "sin(pi*x)"}}]
      u0: {smooth: "sin(pi*x)"}
      g1: {delta: 0.45}

``a``, ``b`` and ``f`` take an ``axis`` per term (default ``x``); ``q`` and
``u0`` live in space and ``g0``, ``g1`` in time.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .cases import CASE_IDS, SNAPSHOT_TIMES, builtin_case
from .dist_calc import (DEFAULT_EPSILONS, Constant, Delta, Heaviside, MollifierNet, Smooth, Sum,
                        cosine_net, default_net)
from .problem import ProblemSpec, SpaceTime, Separable

__all__ = ["ParseError", "RunConfig", "parse_config", "load_config", "compile_expression", "NETS"]

NETS = {"exp": default_net, "cosine": cosine_net}

_TOP = {"problem", "scheme", "grid", "epsilons", "net", "outputs"}
_PROBLEM = {"case", "location", "T", "alpha", "name", "a", "b", "q", "f", "u0", "g0", "g1"}
_SCHEME = {"theta"}
_GRID = {"nx", "nt", "x_refine"}
_OUTPUTS = {"snapshots", "directory", "plots"}
_TERM = {"constant", "delta", "heaviside", "smooth", "weight", "low", "high", "axis",
         "support", "time", "space"}

_FUNCS = {name: getattr(np, name) for name in (
    "sin", "cos", "tan", "exp", "log", "sqrt", "abs", "sinh", "cosh", "tanh",
    "arctan", "minimum", "maximum", "where")}
_CONSTS = {"pi": math.pi, "e": math.e}
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
          ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Compare,
          ast.Lt, ast.LtE, ast.Gt, ast.GtE)


class ParseError(ValueError):
    """Configuration error with a 1-based source location."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 key: str | None = None):
        self.line, self.column, self.key = line, column, key
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class RunConfig:
    spec: ProblemSpec = field(default_factory=lambda: builtin_case(1))
    case_id: int | None = 1
    location: float | None = None
    theta: float = 1.0
    nx: int | None = None
    nt: int | None = None
    x_refine: int = 1
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    net_name: str = "exp"
    snapshots: tuple[float, ...] = SNAPSHOT_TIMES
    directory: Path = Path("out")
    plots: bool = True
    source: str = ""

    def net(self) -> MollifierNet:
        return NETS[self.net_name](self.epsilons)


def _err(msg, node, key=None) -> ParseError:
    mark = getattr(node, "start_mark", None)
    if mark is None:
        return ParseError(msg, key=key)
    return ParseError(msg, mark.line + 1, mark.column + 1, key)


def compile_expression(text: str, var: str):
    """Turn ``text`` into a vectorized function of ``var`` (``x`` or ``t``).

    Only arithmetic, comparisons, numpy math functions and ``pi``/``e``
    are allowed.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {text!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ValueError(f"{type(node).__name__} is not allowed in {text!r}")
        if isinstance(node, ast.Name) and node.id not in _FUNCS and node.id not in _CONSTS and node.id != var:
            raise ValueError(f"unknown name {node.id!r} in {text!r} (variable is {var!r})")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise ValueError(f"only numpy functions may be called in {text!r}")
    code = compile(tree, "<expr>", "eval")
    namespace = {"__builtins__": {}, **_FUNCS, **_CONSTS}

    def func(v):
        v = np.asarray(v, float)
        return np.broadcast_to(eval(code, namespace, {var: v}), v.shape).astype(float)

    func.__name__ = f"expr[{text}]"
    return func


class _Reader:
    """Turns composed YAML nodes into values, remembering where they came from."""

    def __init__(self):
        self._loader = yaml.SafeLoader("")

    def value(self, node):
        return self._loader.construct_object(node, deep=True)

    def mapping(self, node, allowed: set, where: str) -> dict:
        if node is None:
            return {}
        if isinstance(node, yaml.ScalarNode) and node.value in ("", "~", "null"):
            return {}
        if not isinstance(node, yaml.MappingNode):
            raise _err(f"{where} must be a mapping", node, where)
        out = {}
        for key_node, val_node in node.value:
            key = self.value(key_node)
            if key not in allowed:
                raise _err(f"unknown key {key!r} in {where}; allowed: {', '.join(sorted(allowed))}",
                           key_node, str(key))
            if key in out:
                raise _err(f"duplicate key {key!r} in {where}", key_node, str(key))
            out[key] = val_node
        return out

    def number(self, node, key, lo=-math.inf, hi=math.inf, integer=False):
        val = self.value(node)
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise _err(f"{key} must be a number, got {val!r}", node, key)
        if integer and not float(val).is_integer():
            raise _err(f"{key} must be an integer, got {val!r}", node, key)
        if not lo <= val <= hi:
            raise _err(f"{key}={val!r} is outside [{lo}, {hi}]", node, key)
        return int(val) if integer else float(val)

    def numbers(self, node, key) -> tuple[float, ...]:
        if not isinstance(node, yaml.SequenceNode):
            raise _err(f"{key} must be a list of numbers", node, key)
        return tuple(self.number(item, key) for item in node.value)

    # -- terms ---------------------------------------------------------------

    def expr(self, node, key, var: str):
        """A single 1-D term (number or mapping) or a list of them."""
        if isinstance(node, yaml.SequenceNode):
            terms = [self.expr(item, key, var) for item in node.value]
            if not terms:
                raise _err(f"{key} has no terms", node, key)
            return terms[0] if len(terms) == 1 else Sum(tuple(terms))
        if isinstance(node, yaml.ScalarNode):
            return Constant(self.number(node, key))
        spec = self.mapping(node, _TERM - {"axis", "time", "space"}, key)
        kinds = [k for k in ("constant", "delta", "heaviside", "smooth") if k in spec]
        if len(kinds) != 1:
            raise _err(f"{key}: a term needs exactly one of constant, delta, heaviside, smooth", node, key)
        kind = kinds[0]
        try:
            if kind == "constant":
                return Constant(self.number(spec["constant"], key))
            if kind == "delta":
                weight = self.number(spec["weight"], key) if "weight" in spec else 1.0
                return Delta(self.number(spec["delta"], key), weight)
            if kind == "heaviside":
                low = self.number(spec["low"], key) if "low" in spec else 0.0
                high = self.number(spec["high"], key) if "high" in spec else 1.0
                return Heaviside(self.number(spec["heaviside"], key), low, high)
            text = self.value(spec["smooth"])
            if not isinstance(text, str):
                text = str(text)
            support = self.numbers(spec["support"], key) if "support" in spec else (-math.inf, math.inf)
            if len(support) != 2:
                raise _err(f"{key}: support needs two numbers", spec["support"], key)
            return Smooth(compile_expression(text, var), tuple(support), label=text)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise _err(f"{key}: {exc}", spec[kind], key) from None

    def spacetime(self, node, key) -> SpaceTime:
        items = node.value if isinstance(node, yaml.SequenceNode) else [node]
        terms = []
        for item in items:
            if isinstance(item, yaml.MappingNode):
                spec = self.mapping(item, _TERM, key)
                if "time" in spec or "space" in spec:
                    extra = set(spec) - {"time", "space"}
                    if extra:
                        raise _err(f"{key}: product terms take only time and space", item, key)
                    tf = self.expr(spec["time"], key, "t") if "time" in spec else Constant(1.0)
                    sf = self.expr(spec["space"], key, "x") if "space" in spec else Constant(1.0)
                    terms.append(Separable(tf, sf))
                    continue
                axis = self.value(spec["axis"]) if "axis" in spec else "x"
                if axis not in ("x", "t"):
                    raise _err(f"{key}: axis must be x or t, got {axis!r}", spec["axis"], key)
                stripped = yaml.MappingNode(item.tag, [(k, v) for k, v in item.value
                                                       if self.value(k) != "axis"],
                                            start_mark=item.start_mark, end_mark=item.end_mark)
                one = self.expr(stripped, key, axis)
                terms.append(Separable(one, Constant(1.0)) if axis == "t" else Separable(Constant(1.0), one))
            else:
                terms.append(Separable(Constant(1.0), self.expr(item, key, "x")))
        if not terms:
            raise _err(f"{key} has no terms", node, key)
        return SpaceTime(tuple(terms))


def parse_config(text: str, base_dir: Path | None = None) -> RunConfig:
    """Parse YAML ``text`` into a :class:`RunConfig`; errors carry line and column."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ParseError(exc.problem or str(exc), mark.line + 1 if mark else None,
                         mark.column + 1 if mark else None) from None
    r = _Reader()
    top = r.mapping(root, _TOP, "config")
    kw = {"source": text}

    prob = r.mapping(top.get("problem"), _PROBLEM, "problem")
    T = r.number(prob["T"], "T", lo=1e-12) if "T" in prob else 1.0
    inline = [k for k in ("a", "b", "q", "f", "u0", "g0", "g1") if k in prob]
    if "case" in prob and inline:
        raise _err(f"give either case or inline terms, not both ({', '.join(inline)})", prob["case"], "case")
    if inline:
        if "location" in prob:
            raise _err("location applies only to built-in cases", prob["location"], "location")
        fields = {}
        for k in ("a", "b", "f"):
            if k in prob:
                fields[k] = r.spacetime(prob[k], k)
        for k in ("q", "u0"):
            if k in prob:
                fields[k] = r.expr(prob[k], k, "x")
        for k in ("g0", "g1"):
            if k in prob:
                fields[k] = r.expr(prob[k], k, "t")
        alpha = r.number(prob["alpha"], "alpha", lo=1e-300) if "alpha" in prob else 1.0
        name = str(r.value(prob["name"])) if "name" in prob else "inline"
        try:
            kw["spec"] = ProblemSpec(**fields, T=T, alpha=alpha, name=name)
        except ValueError as exc:
            raise _err(f"problem: {exc}", top["problem"], "problem") from None
        kw["case_id"] = None
    else:
        cid = r.number(prob["case"], "case", integer=True) if "case" in prob else 1
        if cid not in CASE_IDS:
            raise _err(f"case must be one of {CASE_IDS}, got {cid}", prob["case"], "case")
        loc = None
        if "location" in prob:
            loc = r.number(prob["location"], "location", lo=0.0, hi=max(T, 1.0))
        try:
            spec = builtin_case(cid, loc, T)
        except ValueError as exc:
            raise _err(str(exc), prob.get("location", prob.get("case")), "location") from None
        if "alpha" in prob or "name" in prob:
            bad = prob.get("alpha", prob.get("name"))
            raise _err("alpha and name apply only to inline problems", bad,
                       "alpha" if "alpha" in prob else "name")
        kw.update(spec=spec, case_id=cid, location=loc)

    scheme = r.mapping(top.get("scheme"), _SCHEME, "scheme")
    if "theta" in scheme:
        kw["theta"] = r.number(scheme["theta"], "theta", 0.5, 1.0)

    grid = r.mapping(top.get("grid"), _GRID, "grid")
    for k in ("nx", "nt"):
        if k in grid and r.value(grid[k]) not in ("auto", None):
            kw[k] = r.number(grid[k], k, lo=2, integer=True)
    if "x_refine" in grid:
        kw["x_refine"] = r.number(grid["x_refine"], "x_refine", lo=1, integer=True)

    if "epsilons" in top:
        eps = r.numbers(top["epsilons"], "epsilons")
        if not eps:
            raise _err("epsilons is empty", top["epsilons"], "epsilons")
        if any(not 0 < e <= 1 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise _err("epsilons must be strictly decreasing values in (0, 1]", top["epsilons"], "epsilons")
        kw["epsilons"] = eps
    if "net" in top:
        name = r.value(top["net"])
        if name not in NETS:
            raise _err(f"net must be one of {sorted(NETS)}, got {name!r}", top["net"], "net")
        kw["net_name"] = name

    out = r.mapping(top.get("outputs"), _OUTPUTS, "outputs")
    if "snapshots" in out:
        snaps = r.numbers(out["snapshots"], "snapshots")
        if any(not 0 <= s <= T for s in snaps):
            raise _err(f"snapshot times must lie in [0, {T}]", out["snapshots"], "snapshots")
        kw["snapshots"] = snaps
    elif T != 1.0:
        kw["snapshots"] = tuple(s * T for s in SNAPSHOT_TIMES)
    if "directory" in out:
        d = Path(str(r.value(out["directory"])))
        kw["directory"] = d if d.is_absolute() or base_dir is None else base_dir / d
    if "plots" in out:
        val = r.value(out["plots"])
        if not isinstance(val, bool):
            raise _err(f"plots must be true or false, got {val!r}", out["plots"], "plots")
        kw["plots"] = val
    return RunConfig(**kw)


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)
