"""Theta-scheme finite differences for one regularized instance.

Space: conservative flux form with arithmetic-mean face coefficients and a
centered drift.  Time: theta-weighting (theta = 1 implicit Euler, 1/2
Crank-Nicolson).  Each step is a tridiagonal solve (LAPACK ``gttrf/gttrs``).
"""
from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .problem import RegularizedInstance

__all__ = [
    "SchemeConfig", "SolutionTrajectory", "TridiagonalOperator", "SingularSystem",
    "discretize_operator", "step", "march", "solve", "solve_lifted", "write_trajectory_csv",
    "tridiagonal_solve",
]

PIVOT_TOL = 1e-14


class SingularSystem(ArithmeticError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    theta: float = 1.0

    def __post_init__(self):
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0.5, 1], got {self.theta}")


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Row ``i``: ``lower[i] u[i-1] + diag[i] u[i] + upper[i] u[i+1]``."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = self.diag * u
        out[1:] += self.lower[1:] * u[:-1]
        out[:-1] += self.upper[:-1] * u[1:]
        return out

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower[1:], -1) + np.diag(self.upper[:-1], 1)


def discretize_operator(instance: RegularizedInstance, n: int) -> TridiagonalOperator:
    """``L_h u = -(a u_x)_x + b u_x + q u`` at time node ``n``; identity rows at the boundary."""
    a = instance.at("a", n)
    b = instance.at("b", n)
    q = instance.q
    h = instance.h
    face = 0.5 * (a[1:] + a[:-1])          # a_{i+1/2}, i = 0..nx-1
    lower = np.zeros_like(a)
    diag = np.ones_like(a)
    upper = np.zeros_like(a)
    lower[1:-1] = -face[:-1] / h**2 - b[1:-1] / (2 * h)
    upper[1:-1] = -face[1:] / h**2 + b[1:-1] / (2 * h)
    diag[1:-1] = (face[:-1] + face[1:]) / h**2 + q[1:-1]
    return TridiagonalOperator(lower, diag, upper)


class _Factor:
    """LU factorization of a tridiagonal matrix, reused across right-hand sides."""

    def __init__(self, lower, diag, upper):
        dl, d, du, du2, ipiv, info = lapack.dgttrf(lower[1:].copy(), diag.copy(), upper[:-1].copy())
        if info > 0 or np.min(np.abs(d)) < PIVOT_TOL:
            raise SingularSystem(f"pivot below {PIVOT_TOL:g} (min |pivot| = {np.min(np.abs(d)):.3g})")
        self._lu = (dl, d, du, du2, ipiv)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x, info = lapack.dgttrs(*self._lu, rhs)
        if info != 0:
            raise SingularSystem(f"gttrs failed with info={info}")
        return x


def tridiagonal_solve(lower, diag, upper, rhs) -> np.ndarray:
    return _Factor(np.asarray(lower, float), np.asarray(diag, float), np.asarray(upper, float)).solve(
        np.asarray(rhs, float))


def _system(op: TridiagonalOperator, theta: float, tau: float) -> _Factor:
    lower = theta * tau * op.lower
    upper = theta * tau * op.upper
    diag = 1.0 + theta * tau * op.diag
    lower[-1] = upper[0] = 0.0
    diag[0] = diag[-1] = 1.0
    return _Factor(lower, diag, upper)


def _rhs(u_n, op_n, instance, n, theta):
    tau = instance.tau
    rhs = u_n.copy()
    if theta < 1.0:
        rhs -= (1.0 - theta) * tau * op_n.apply(u_n)
    f_new = instance.at("f", n + 1)
    f_old = instance.at("f", n)
    rhs += tau * (theta * f_new + (1.0 - theta) * f_old)
    rhs[0] = instance.g0[n + 1]
    rhs[-1] = instance.g1[n + 1]
    return rhs


def step(u_n: np.ndarray, instance: RegularizedInstance, config: SchemeConfig = SchemeConfig(),
         n: int = 0) -> np.ndarray:
    """Advance ``u_n`` from time node ``n`` to ``n + 1``."""
    op_new = discretize_operator(instance, n + 1)
    op_old = discretize_operator(instance, n)
    return _system(op_new, config.theta, instance.tau).solve(
        _rhs(np.asarray(u_n, float), op_old, instance, n, config.theta))


@dataclass(frozen=True, eq=False)
class SolutionTrajectory:
    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    theta: float
    epsilon: float | None = None
    label: str = ""
    stats: dict = field(default_factory=dict)

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

    def node(self, t: float) -> int:
        """Index of the time node closest to ``t``."""
        return int(np.argmin(np.abs(self.t - t)))

    def snapshot(self, t: float) -> np.ndarray:
        return self.values[self.node(t)]


def _peclet(instance: RegularizedInstance) -> float:
    return float(np.max(np.abs(instance.b))) * instance.h / (2 * float(np.min(instance.a)))


def march(instance: RegularizedInstance, config: SchemeConfig = SchemeConfig()):
    """Yield ``(n, u^n)`` for ``n = 0..nt`` without storing the trajectory.

    The yielded arrays are fresh per step and may be kept by the caller.
    """
    theta = config.theta
    u = np.array(instance.u0, float)
    yield 0, u
    frozen = not (instance.is_time_dependent("a") or instance.is_time_dependent("b"))
    op_old = discretize_operator(instance, 0)
    factor = _system(op_old, theta, instance.tau) if frozen else None
    for n in range(instance.nt):
        if frozen:
            op_new = op_old
        else:
            op_new = discretize_operator(instance, n + 1)
            factor = _system(op_new, theta, instance.tau)
        u = factor.solve(_rhs(u, op_old, instance, n, theta))
        if not np.all(np.isfinite(u)):
            raise FloatingPointError(f"solution has non-finite values at step {n + 1}")
        op_old = op_new
        yield n + 1, u


def _check_peclet(instance) -> float:
    pe = _peclet(instance)
    if pe > 1:
        warnings.warn(f"cell Peclet number {pe:.3g} > 1; centered drift may oscillate",
                      RuntimeWarning, stacklevel=3)
    return pe


def solve(instance: RegularizedInstance, config: SchemeConfig = SchemeConfig()) -> SolutionTrajectory:
    """March the theta-scheme over all ``nt`` steps."""
    start = time.perf_counter()
    pe = _check_peclet(instance)
    u = np.empty((instance.nt + 1, instance.nx + 1))
    for n, row in march(instance, config):
        u[n] = row
    u.flags.writeable = False
    stats = dict(wall_time=time.perf_counter() - start, u_max=float(u.max()),
                 u_min=float(u.min()), peclet=pe)
    return SolutionTrajectory(instance.x, instance.t, u, config.theta, instance.epsilon, instance.label, stats)


def solve_lifted(instance: RegularizedInstance, config: SchemeConfig = SchemeConfig()) -> SolutionTrajectory:
    """Solve for ``w = u - psi`` with homogeneous boundary data, then add ``psi`` back."""
    from .problem import lifted_instance

    hom, lifting = lifted_instance(instance)
    w = solve(hom, config)
    u = lifting.restore(w.values)
    u.flags.writeable = False
    return SolutionTrajectory(w.x, w.t, u, w.theta, w.epsilon, w.label, dict(w.stats, lifted=True))


def write_trajectory_csv(traj: SolutionTrajectory, path, times=None) -> None:
    """CSV ``t,x,u`` row-major by time; ``times`` selects the nearest nodes."""
    nodes = range(traj.nt + 1) if times is None else sorted({traj.node(t) for t in times})
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "x", "u"])
        for n in nodes:
            tn = repr(float(traj.t[n]))
            for xi, ui in zip(traj.x, traj.values[n]):
                writer.writerow([tn, repr(float(xi)), repr(float(ui))])
