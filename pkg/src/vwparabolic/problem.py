"""Problem data, validation, the regularized instance and boundary lifting.

The equation is

    u_t - (a u_x)_x + b u_x + q u = f   on [0, T] x (0, 1),
    u(0, x) = u0(x),  u(t, 0) = g0(t),  u(t, 1) = g1(t).

``a``, ``b`` and ``f`` are sums of separable terms ``c_t(t) * c_x(x)``; each
term may carry at most one singular (delta or step) factor.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .dist_calc import (
    Constant, DistExpr, MollifierNet, SampledField1D, check_domain, is_singular,
    mollify, sample,
)

__all__ = [
    "Separable", "SpaceTime", "in_x", "in_t", "product", "ProblemSpec",
    "RegularizedInstance", "Lifting", "ValidationReport", "EllipticityViolated",
    "ResolutionInsufficient", "validate", "build_instance", "sample_instance",
    "lift", "lifted_instance", "spatial_gradient", "MOLLIFY_MODES",
]

MOLLIFY_MODES = ("singular", "all", "none")
# grid cells required per epsilon
CELLS_PER_EPS = 4


class EllipticityViolated(ValueError):
    pass


class ResolutionInsufficient(ValueError):
    pass


@dataclass(frozen=True)
class Separable:
    time: DistExpr = Constant(1.0)
    space: DistExpr = Constant(1.0)


@dataclass(frozen=True)
class SpaceTime:
    terms: tuple[Separable, ...] = ()

    def __add__(self, other):
        return SpaceTime(self.terms + as_spacetime(other).terms)

    def singular_axes(self) -> set[str]:
        axes = set()
        for term in self.terms:
            if is_singular(term.time):
                axes.add("t")
            if is_singular(term.space):
                axes.add("x")
        return axes


def in_x(expr: DistExpr) -> SpaceTime:
    return SpaceTime((Separable(Constant(1.0), expr),))


def in_t(expr: DistExpr) -> SpaceTime:
    return SpaceTime((Separable(expr, Constant(1.0)),))


def product(time_expr: DistExpr, space_expr: DistExpr) -> SpaceTime:
    return SpaceTime((Separable(time_expr, space_expr),))


def as_spacetime(value) -> SpaceTime:
    if isinstance(value, SpaceTime):
        return value
    if isinstance(value, Separable):
        return SpaceTime((value,))
    if isinstance(value, (int, float)):
        return in_x(Constant(float(value)))
    return in_x(value)


@dataclass(frozen=True)
class ProblemSpec:
    a: SpaceTime = field(default_factory=lambda: in_x(Constant(1.0)))
    b: SpaceTime = field(default_factory=lambda: in_x(Constant(0.0)))
    q: DistExpr = Constant(0.0)
    f: SpaceTime = field(default_factory=lambda: in_x(Constant(0.0)))
    u0: DistExpr = Constant(0.0)
    g0: DistExpr = Constant(0.0)
    g1: DistExpr = Constant(0.0)
    T: float = 1.0
    alpha: float = 1.0
    name: str = ""

    def __post_init__(self):
        for name in ("a", "b", "f"):
            object.__setattr__(self, name, as_spacetime(getattr(self, name)))
        for name in ("q", "u0", "g0", "g1"):
            value = getattr(self, name)
            if isinstance(value, (int, float)):
                object.__setattr__(self, name, Constant(float(value)))
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        for name in ("a", "b", "f"):
            for term in getattr(self, name).terms:
                if is_singular(term.time) and is_singular(term.space):
                    raise ValueError(f"{name}: a separable term may have only one singular factor")
                check_domain(term.space, 0.0, 1.0)
                check_domain(term.time, 0.0, self.T)
        for name in ("q", "u0"):
            check_domain(getattr(self, name), 0.0, 1.0)
        for name in ("g0", "g1"):
            check_domain(getattr(self, name), 0.0, self.T)

    def singular_axes(self) -> set[str]:
        axes = self.a.singular_axes() | self.b.singular_axes() | self.f.singular_axes()
        if is_singular(self.q) or is_singular(self.u0):
            axes.add("x")
        if is_singular(self.g0) or is_singular(self.g1):
            axes.add("t")
        return axes

    def is_singular(self) -> bool:
        return bool(self.singular_axes())

    def scaled_data(self, lam: float) -> "ProblemSpec":
        """Same coefficients, data ``(u0, f, g0, g1)`` multiplied by ``lam``."""
        from .dist_calc import Smooth, Sum, Delta, Heaviside

        def scale(expr):
            if isinstance(expr, Constant):
                return Constant(lam * expr.value)
            if isinstance(expr, Smooth):
                fn = expr.func
                return Smooth(lambda x, fn=fn: lam * np.asarray(fn(x), dtype=float), expr.support, expr.label)
            if isinstance(expr, Delta):
                return Delta(expr.location, lam * expr.weight)
            if isinstance(expr, Heaviside):
                return Heaviside(expr.location, lam * expr.low, lam * expr.high)
            return Sum(tuple(scale(t) for t in expr.terms))

        f = SpaceTime(tuple(Separable(t.time, scale(t.space)) for t in self.f.terms))
        return replace(self, f=f, u0=scale(self.u0), g0=scale(self.g0), g1=scale(self.g1))


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RegularizedInstance:
    """Grid samples of all coefficients and data for one epsilon.

    ``a``, ``b`` and ``f`` are 2-D arrays broadcastable to ``(nt+1, nx+1)``:
    a leading axis of length one means time-independent, a trailing axis of
    length one means space-independent.
    """

    epsilon: float | None
    x: np.ndarray
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    q: np.ndarray
    f: np.ndarray
    u0: np.ndarray
    g0: np.ndarray
    g1: np.ndarray
    alpha: float
    mode: str = "singular"
    label: str = ""

    @property
    def nx(self) -> int:
        return self.x.size - 1

    @property
    def nt(self) -> int:
        return self.t.size - 1

    @property
    def h(self) -> float:
        return 1.0 / self.nx

    @property
    def tau(self) -> float:
        return float(self.t[-1]) / self.nt

    @property
    def T(self) -> float:
        return float(self.t[-1])

    def is_time_dependent(self, name: str) -> bool:
        return getattr(self, name).shape[0] > 1

    def at(self, name: str, n: int) -> np.ndarray:
        """Spatial profile of a space-time field at time node ``n``."""
        arr = getattr(self, name)
        row = arr[0] if arr.shape[0] == 1 else arr[n]
        return np.broadcast_to(row, self.x.shape)

    def full(self, name: str) -> np.ndarray:
        return np.broadcast_to(getattr(self, name), (self.t.size, self.x.size))

    def has_zero_boundary(self) -> bool:
        return not (np.any(self.g0) or np.any(self.g1))


def _grid(nx: int, nt: int, T: float):
    if nx < 2 or nt < 1:
        raise ValueError(f"grid too small: nx={nx}, nt={nt}")
    return np.linspace(0.0, 1.0, nx + 1), np.linspace(0.0, T, nt + 1)


def _sample_1d(expr, net, eps, grid, mode) -> np.ndarray:
    if mode == "none":
        return sample(expr, grid).values
    if mode == "all" or is_singular(expr):
        return mollify(expr, net, eps, grid).values
    return sample(expr, grid).values


def _sample_spacetime(st: SpaceTime, net, eps, x, t, mode) -> np.ndarray:
    out = np.zeros((1, 1))
    for term in st.terms:
        tv = (np.array([[term.time.value]]) if isinstance(term.time, Constant)
              else _sample_1d(term.time, net, eps, t, mode)[:, None])
        xv = (np.array([[term.space.value]]) if isinstance(term.space, Constant)
              else _sample_1d(term.space, net, eps, x, mode)[None, :])
        out = out + tv * xv
    if out.shape == (1, 1):
        out = np.broadcast_to(out, (1, x.size))
    return out.copy()


def spatial_gradient(arr, h: float) -> np.ndarray:
    """``d/dx`` along the last axis; zero for fields without an x axis."""
    arr = np.asarray(arr, float)
    if arr.shape[-1] == 1:
        return np.zeros_like(arr)
    return np.gradient(arr, h, axis=-1)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def _assemble(spec: ProblemSpec, net, eps, nx, nt, mode) -> RegularizedInstance:
    if mode not in MOLLIFY_MODES:
        raise ValueError(f"unknown mollification mode {mode!r}")
    x, t = _grid(nx, nt, spec.T)
    fields = dict(
        a=_sample_spacetime(spec.a, net, eps, x, t, mode),
        b=_sample_spacetime(spec.b, net, eps, x, t, mode),
        f=_sample_spacetime(spec.f, net, eps, x, t, mode),
        q=_sample_1d(spec.q, net, eps, x, mode),
        u0=_sample_1d(spec.u0, net, eps, x, mode),
        g0=_sample_1d(spec.g0, net, eps, t, mode),
        g1=_sample_1d(spec.g1, net, eps, t, mode),
    )
    for name, arr in fields.items():
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} has non-finite samples at epsilon={eps}")
    return RegularizedInstance(
        epsilon=eps, x=_freeze(x), t=_freeze(t),
        **{k: _freeze(v) for k, v in fields.items()},
        alpha=spec.alpha, mode=mode, label=spec.name,
    )


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    ok: bool = True
    min_a: dict = field(default_factory=dict)
    peclet: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def summary(self) -> str:
        lines = ["valid" if self.ok else "INVALID"]
        lines += [f"  min a_eps(eps={e:g}) = {v:.6g}" for e, v in self.min_a.items()]
        lines += [f"  cell Peclet(eps={e:g}) = {v:.4g}" for e, v in self.peclet.items()]
        lines += ["  " + m for m in self.messages + self.warnings]
        return "\n".join(lines)


def required_grid(T: float, epsilon: float) -> tuple[int, int]:
    """Smallest (nx, nt) with h <= eps/4 and tau <= eps/4."""
    nx = math.ceil(CELLS_PER_EPS / epsilon - 1e-9)
    nt = math.ceil(CELLS_PER_EPS * T / epsilon - 1e-9)
    return nx, nt


def validate(spec: ProblemSpec, net: MollifierNet, nx: int | None = None,
             nt: int | None = None, mode: str = "singular",
             raise_errors: bool = True) -> ValidationReport:
    """Check ellipticity at the largest and smallest epsilon, finiteness and grid resolution."""
    report = ValidationReport()
    eps_min = min(net.epsilons)
    if nx is not None or nt is not None:
        for eps in net.epsilons:
            need_nx, need_nt = required_grid(spec.T, eps)
            if nx is not None and nx < need_nx:
                report.ok = False
                report.messages.append(
                    f"ResolutionInsufficient: nx={nx} gives h={1 / nx:.4g} > eps/4={eps / 4:.4g} (eps={eps:g}); need nx >= {need_nx}")
            if nt is not None and nt < need_nt:
                report.ok = False
                report.messages.append(
                    f"ResolutionInsufficient: nt={nt} gives tau={spec.T / nt:.4g} > eps/4={eps / 4:.4g} (eps={eps:g}); need nt >= {need_nt}")
            if not report.ok:
                break
        if not report.ok and raise_errors:
            raise ResolutionInsufficient("; ".join(report.messages))

    check_nx, check_nt = required_grid(spec.T, eps_min)
    check_nx, check_nt = max(2 * check_nx, nx or 0, 64), max(2 * check_nt, nt or 0, 16)
    for eps in sorted({max(net.epsilons), eps_min}, reverse=True):
        try:
            inst = _assemble(spec, net, eps, check_nx, check_nt, mode)
        except ValueError as exc:
            report.ok = False
            report.messages.append(str(exc))
            if raise_errors:
                raise
            continue
        amin = float(np.min(inst.a))
        report.min_a[eps] = amin
        if amin < spec.alpha * (1 - 1e-12):
            report.ok = False
            msg = f"EllipticityViolated: min a_eps = {amin:.6g} < alpha = {spec.alpha:g} at eps={eps:g}"
            report.messages.append(msg)
            if raise_errors:
                raise EllipticityViolated(msg)
        if nx is not None:
            pe = float(np.max(np.abs(inst.b))) / nx / (2 * max(amin, 1e-300))
            report.peclet[eps] = pe
            if pe > 1:
                msg = f"cell Peclet number {pe:.3g} > 1 at eps={eps:g}; centered drift may oscillate"
                report.warnings.append(msg)
                warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return report


def build_instance(spec: ProblemSpec, net: MollifierNet, epsilon: float, nx: int, nt: int,
                   mode: str = "singular", check: bool = True) -> RegularizedInstance:
    """Mollify/sample every component of ``spec`` on a uniform (nx, nt) grid."""
    if check:
        validate(spec, net.with_epsilons([epsilon]), nx, nt, mode)
    inst = _assemble(spec, net, epsilon, nx, nt, mode)
    if float(np.min(inst.a)) < spec.alpha * (1 - 1e-12):
        raise EllipticityViolated(f"min a_eps = {np.min(inst.a):.6g} < alpha = {spec.alpha:g}")
    return inst


def sample_instance(spec: ProblemSpec, nx: int, nt: int) -> RegularizedInstance:
    """Instance of a non-singular problem with raw (un-mollified) samples."""
    inst = _assemble(spec, None, None, nx, nt, "none")
    if float(np.min(inst.a)) < spec.alpha * (1 - 1e-12):
        raise EllipticityViolated(f"min a = {np.min(inst.a):.6g} < alpha = {spec.alpha:g}")
    return inst


# ---------------------------------------------------------------------------
# lifting
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Lifting:
    """``psi(t, x) = (1 - x) g0(t) + x g1(t)``."""

    x: np.ndarray
    t: np.ndarray
    g0: np.ndarray
    g1: np.ndarray

    @property
    def psi(self) -> np.ndarray:
        return np.outer(self.g0, 1.0 - self.x) + np.outer(self.g1, self.x)

    @property
    def dpsi_dx(self) -> np.ndarray:
        return self.g1 - self.g0

    @property
    def dpsi_dt(self) -> np.ndarray:
        tau = self.t[1] - self.t[0]
        return np.outer(np.gradient(self.g0, tau), 1.0 - self.x) + np.outer(np.gradient(self.g1, tau), self.x)

    def restore(self, w: np.ndarray) -> np.ndarray:
        return np.asarray(w) + self.psi


def lift(instance: RegularizedInstance):
    """Return ``(lifting, f_tilde, w0)`` for the homogeneous problem in ``w = u - psi``."""
    x, t = instance.x, instance.t
    lifting = Lifting(x, t, np.asarray(instance.g0), np.asarray(instance.g1))
    g0, g1 = lifting.g0[:, None], lifting.g1[:, None]
    dg0 = np.gradient(instance.g0, instance.tau)[:, None]
    dg1 = np.gradient(instance.g1, instance.tau)[:, None]
    dadx = spatial_gradient(instance.a, instance.h)
    X = x[None, :]
    f_tilde = (instance.f - (1 - X) * dg0 - X * dg1 + (dadx - instance.b) * (g1 - g0)
               - instance.q[None, :] * ((1 - X) * g0 + X * g1))
    f_tilde = np.broadcast_to(f_tilde, (t.size, x.size)).copy()
    w0 = instance.u0 - lifting.psi[0]
    return lifting, f_tilde, w0


def lifted_instance(instance: RegularizedInstance):
    """Homogeneous-boundary instance for ``w`` plus the lifting that restores ``u``."""
    lifting, f_tilde, w0 = lift(instance)
    zeros = np.zeros_like(instance.t)
    inst = replace(instance, f=_freeze(f_tilde), u0=_freeze(w0), g0=_freeze(zeros), g1=_freeze(zeros.copy()))
    return inst, lifting
