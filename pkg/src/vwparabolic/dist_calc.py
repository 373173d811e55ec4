"""Distributional data on an interval and its mollification.

A distribution is one of a handful of variants (constant, smooth function,
Dirac delta, Heaviside step, or a flat sum of those).  Mollifying it with
``phi_eps(x) = c * bump(x / eps) / eps`` yields a smooth field that is sampled
on a grid.

Conventions
-----------
* ``Constant`` and ``Smooth`` with unbounded support are continued across the
  domain boundary, so a constant stays a constant after mollification.
* ``Smooth`` with a finite declared support is extended by zero outside it.
* ``Delta`` and ``Heaviside`` are whole-line objects; a delta mollifies
  exactly to ``weight * phi_eps(x - location)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate

__all__ = [
    "Constant", "Smooth", "Delta", "Heaviside", "Sum", "DistExpr",
    "MollifierNet", "SampledField1D", "ZeroMass", "UnsupportedVariant",
    "DEFAULT_EPSILONS", "exp_bump", "cosine_bump", "normalize_bump",
    "default_bump", "default_net", "cosine_net", "mollify", "sample",
    "is_singular", "check_domain", "linf_norm", "l2_norm", "trapezoid_weights",
]

# default epsilon ladder for the built-in experiments
DEFAULT_EPSILONS = (0.3, 0.1, 0.05, 0.031, 0.003)

# Simpson sub-intervals per mollifier support
QUAD_INTERVALS = 64


class ZeroMass(ValueError):
    """The bump has (numerically) zero integral and cannot be normalized."""


class UnsupportedVariant(TypeError):
    """An expression is not one of the supported distribution variants."""


class _Expr:
    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Constant(float(other))
        return Sum((self, other))

    __radd__ = __add__


@dataclass(frozen=True)
class Constant(_Expr):
    value: float


@dataclass(frozen=True)
class Smooth(_Expr):
    """Smooth function; ``func`` must accept numpy arrays."""

    func: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float] = (-math.inf, math.inf)
    label: str = ""

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        vals = np.broadcast_to(np.asarray(self.func(x), dtype=float), x.shape)
        lo, hi = self.support
        if math.isfinite(lo) or math.isfinite(hi):
            vals = np.where((x >= lo) & (x <= hi), vals, 0.0)
        return np.array(vals, dtype=float)


@dataclass(frozen=True)
class Delta(_Expr):
    location: float
    weight: float = 1.0


@dataclass(frozen=True)
class Heaviside(_Expr):
    location: float
    low: float = 0.0
    high: float = 1.0


@dataclass(frozen=True)
class Sum(_Expr):
    terms: tuple = ()

    def __post_init__(self):
        flat = []
        for term in self.terms:
            if isinstance(term, Sum):
                flat.extend(term.terms)
            elif isinstance(term, (Constant, Smooth, Delta, Heaviside)):
                flat.append(term)
            else:
                raise UnsupportedVariant(f"cannot add {type(term).__name__} to a Sum")
        object.__setattr__(self, "terms", tuple(flat))


DistExpr = Union[Constant, Smooth, Delta, Heaviside, Sum]


def is_singular(expr: DistExpr) -> bool:
    """True when the expression contains a Delta or Heaviside part."""
    if isinstance(expr, Sum):
        return any(is_singular(t) for t in expr.terms)
    return isinstance(expr, (Delta, Heaviside))


def check_domain(expr: DistExpr, lo: float, hi: float) -> None:
    """Raise ``ValueError`` if a delta of ``expr`` is not strictly inside (lo, hi)."""
    terms = expr.terms if isinstance(expr, Sum) else (expr,)
    for t in terms:
        if isinstance(t, Delta) and not lo < t.location < hi:
            raise ValueError(f"delta at {t.location} is not inside ({lo}, {hi})")


# ---------------------------------------------------------------------------
# bumps and nets
# ---------------------------------------------------------------------------

def exp_bump(x):
    """``exp(1 / (x^2 - 1))`` on ``|x| < 1`` and zero elsewhere (unnormalized)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(1.0 / (xi * xi - 1.0))
    return out


def cosine_bump(x):
    """``(1 + cos(pi x)) / 2`` on ``|x| < 1``; unit mass already."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 1.0, 0.5 * (1.0 + np.cos(np.pi * x)), 0.0)


def normalize_bump(bump: Callable, breakpoints: Sequence[float] = ()) -> float:
    """Return ``c`` such that ``c * bump`` integrates to one over [-1, 1].

    Adaptive Gauss-Kronrod quadrature; ``breakpoints`` can flag interior
    discontinuities of ``bump``.
    """
    def scalar(s):
        return float(np.asarray(bump(np.array([s])), dtype=float).ravel()[0])

    pts = sorted(p for p in breakpoints if -1.0 < p < 1.0)
    mass, _ = integrate.quad(scalar, -1.0, 1.0, points=pts or None,
                             epsabs=1e-13, epsrel=1e-13, limit=500)
    if not mass > 1e-300:
        raise ZeroMass(f"bump integrates to {mass!r}")
    return 1.0 / mass


@dataclass(frozen=True)
class MollifierNet:
    """Bump on [-1, 1], its normalization ``c`` and a decreasing epsilon ladder."""

    bump: Callable = field(repr=False)
    c: float
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS
    name: str = "bump"

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if not eps:
            raise ValueError("epsilon ladder is empty")
        if any(not 0.0 < e <= 1.0 for e in eps):
            raise ValueError(f"epsilons must lie in (0, 1]: {eps}")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError(f"epsilons must be strictly decreasing: {eps}")
        object.__setattr__(self, "epsilons", eps)

    def kernel(self, x, epsilon: float):
        """``phi_eps(x) = c * bump(x / eps) / eps``."""
        x = np.asarray(x, dtype=float)
        return self.c * self.bump(x / epsilon) / epsilon

    def with_epsilons(self, epsilons) -> "MollifierNet":
        return MollifierNet(self.bump, self.c, tuple(epsilons), self.name)

    @cached_property
    def _cdf_table(self):
        s = np.linspace(-1.0, 1.0, 20001)
        dens = self.c * self.bump(s)
        cdf = integrate.cumulative_trapezoid(dens, s, initial=0.0)
        return s, cdf

    def cdf(self, z):
        """Integral of ``c * bump`` from -1 to ``z``."""
        s, cdf = self._cdf_table
        return np.interp(np.asarray(z, dtype=float), s, cdf, left=0.0, right=cdf[-1])

    def has_epsilon(self, epsilon: float) -> bool:
        return any(math.isclose(epsilon, e, rel_tol=1e-12) for e in self.epsilons)


def default_bump() -> tuple[Callable, float]:
    """The ``exp(1/(x^2-1))`` bump and its normalization constant."""
    return exp_bump, normalize_bump(exp_bump)


def default_net(epsilons=DEFAULT_EPSILONS) -> MollifierNet:
    bump, c = default_bump()
    return MollifierNet(bump, c, tuple(epsilons), "exp")


def cosine_net(epsilons=DEFAULT_EPSILONS) -> MollifierNet:
    return MollifierNet(cosine_bump, normalize_bump(cosine_bump), tuple(epsilons), "cosine")


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SampledField1D:
    grid: np.ndarray
    values: np.ndarray
    epsilon: float | None
    source_expr: DistExpr | None = field(default=None, repr=False)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        if grid.shape != values.shape or grid.ndim != 1:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if not np.all(np.isfinite(values)):
            raise ValueError("sampled field has non-finite values")
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)


def _simpson_nodes(n: int = QUAD_INTERVALS):
    t = np.linspace(0.0, 1.0, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return t, w / (3.0 * n)


def _mollify_smooth(term: Smooth, net: MollifierNet, eps: float, x: np.ndarray) -> np.ndarray:
    # (S * phi_eps)(x) = int S(x - eps s) c bump(s) ds over the part of [-1, 1]
    # where x - eps s stays inside the support
    p, q = term.support
    lo = np.full_like(x, -1.0)
    hi = np.full_like(x, 1.0)
    if math.isfinite(q):
        lo = np.maximum(lo, (x - q) / eps)
    if math.isfinite(p):
        hi = np.minimum(hi, (x - p) / eps)
    span = np.clip(hi - lo, 0.0, None)
    t, w = _simpson_nodes()
    s = lo[:, None] + span[:, None] * t[None, :]
    integrand = term(x[:, None] - eps * s) * (net.c * net.bump(s))
    return integrand @ w * span


def _mollify_term(term, net: MollifierNet, eps: float, x: np.ndarray) -> np.ndarray:
    if isinstance(term, Constant):
        return np.full_like(x, float(term.value))
    if isinstance(term, Delta):
        return term.weight * net.kernel(x - term.location, eps)
    if isinstance(term, Heaviside):
        return term.low + (term.high - term.low) * net.cdf((x - term.location) / eps)
    if isinstance(term, Smooth):
        return _mollify_smooth(term, net, eps, x)
    raise UnsupportedVariant(f"cannot mollify {type(term).__name__}")


def mollify(expr: DistExpr, net: MollifierNet, epsilon: float, grid) -> SampledField1D:
    """Sample ``expr * phi_eps`` on ``grid``."""
    if not net.has_epsilon(epsilon):
        raise ValueError(f"epsilon {epsilon} is not in the net {net.epsilons}")
    x = np.asarray(grid, dtype=float)
    terms = expr.terms if isinstance(expr, Sum) else (expr,)
    values = np.zeros_like(x)
    for term in terms:
        values = values + _mollify_term(term, net, epsilon, x)
    return SampledField1D(x, values, epsilon, expr)


def sample(expr: DistExpr, grid) -> SampledField1D:
    """Pointwise samples of a non-singular expression (no mollification)."""
    x = np.asarray(grid, dtype=float)
    terms = expr.terms if isinstance(expr, Sum) else (expr,)
    values = np.zeros_like(x)
    for term in terms:
        if isinstance(term, Constant):
            values = values + term.value
        elif isinstance(term, Smooth):
            values = values + term(x)
        elif isinstance(term, (Delta, Heaviside)):
            raise UnsupportedVariant(f"{type(term).__name__} has no pointwise values; mollify it")
        else:
            raise UnsupportedVariant(f"cannot sample {type(term).__name__}")
    return SampledField1D(x, values, None, expr)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def trapezoid_weights(grid) -> np.ndarray:
    x = np.asarray(grid, dtype=float)
    if x.size == 1:
        return np.zeros(1)
    dx = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def linf_norm(field: SampledField1D) -> float:
    return float(np.max(np.abs(field.values)))


def l2_norm(field: SampledField1D, weights=None) -> float:
    """Composite-trapezoid L2 norm (or a user-supplied quadrature rule)."""
    w = trapezoid_weights(field.grid) if weights is None else np.asarray(weights, dtype=float)
    return float(math.sqrt(np.dot(w, field.values ** 2)))
