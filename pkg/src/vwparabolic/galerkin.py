"""Sine-basis Galerkin approximation for homogeneous Dirichlet problems.

With ``w_k(x) = sqrt(2) sin(k pi x)`` the coefficients of
``u_m = sum_k d_k(t) w_k`` solve the linear ODE system

    d_k' + sum_l (a^{lk}(t) + b^{lk}(t) + g^{lk}) d_l = f^k(t),

    a^{lk} = (a w_l', w_k'),  b^{lk} = (b w_l', w_k),  g^{lk} = (q w_l, w_k),
    f^k = (f, w_k),  d_k(0) = (u0, w_k).

Inner products use composite quadrature on the instance grid.  Inhomogeneous
boundary data must be lifted first (see ``problem.lifted_instance``).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .fdsolver import SingularSystem, SolutionTrajectory, PIVOT_TOL
from .problem import RegularizedInstance

__all__ = [
    "GalerkinSystem", "CoefficientTrajectory", "QuadratureUnderResolved",
    "basis", "basis_derivative", "quadrature_weights", "assemble", "integrate",
    "reconstruct", "write_coefficients_csv",
]


class QuadratureUnderResolved(ValueError):
    pass


def basis(m: int, x) -> np.ndarray:
    """Rows ``w_k(x)`` for ``k = 1..m``."""
    k = np.arange(1, m + 1)[:, None]
    return np.sqrt(2.0) * np.sin(k * np.pi * np.asarray(x, float)[None, :])


def basis_derivative(m: int, x) -> np.ndarray:
    k = np.arange(1, m + 1)[:, None]
    return np.sqrt(2.0) * k * np.pi * np.cos(k * np.pi * np.asarray(x, float)[None, :])


def quadrature_weights(x) -> np.ndarray:
    """Composite Simpson weights on a uniform grid (trapezoid if the cell count is odd)."""
    x = np.asarray(x, float)
    n = x.size - 1
    h = (x[-1] - x[0]) / n
    w = np.full(n + 1, h)
    if n % 2 == 0:
        w[1:-1:2] = 4 * h / 3
        w[2:-1:2] = 2 * h / 3
        w[0] = w[-1] = h / 3
    else:
        w[0] = w[-1] = h / 2
    return w


@dataclass(frozen=True, eq=False)
class GalerkinSystem:
    m: int
    x: np.ndarray
    t: np.ndarray
    A: np.ndarray          # (1 or nt+1, m, m); A[., k, l] = a^{lk}
    B: np.ndarray          # (1 or nt+1, m, m); B[., k, l] = b^{lk}
    G: np.ndarray          # (m, m);            G[k, l] = g^{lk}
    F: np.ndarray          # (1 or nt+1, m)
    d0: np.ndarray         # (m,)

    def matrix(self, n: int) -> np.ndarray:
        """System matrix ``M`` with ``d' + M d = F`` at time node ``n``."""
        A = self.A[0] if self.A.shape[0] == 1 else self.A[n]
        B = self.B[0] if self.B.shape[0] == 1 else self.B[n]
        return A + B + self.G

    def load(self, n: int) -> np.ndarray:
        return self.F[0] if self.F.shape[0] == 1 else self.F[n]

    @property
    def time_dependent(self) -> bool:
        return self.A.shape[0] > 1 or self.B.shape[0] > 1


def assemble(instance: RegularizedInstance, m: int) -> GalerkinSystem:
    if not instance.has_zero_boundary():
        raise ValueError("Galerkin assembly needs homogeneous boundary data; lift the instance first")
    if m * instance.h > 0.25:
        raise QuadratureUnderResolved(f"m*h = {m * instance.h:.3g} > 1/4; refine the grid or lower m")
    x = instance.x
    wq = quadrature_weights(x)
    W = basis(m, x)
    dW = basis_derivative(m, x)

    def mats(field, left, right):
        arr = np.asarray(field)
        return np.einsum("kj,nj,lj->nkl", left, arr * wq, right, optimize=True)

    A = mats(instance.a, dW, dW)
    B = mats(instance.b, W, dW)
    G = (W * (wq * instance.q)) @ W.T
    F = np.asarray(instance.f) * wq @ W.T
    d0 = W @ (wq * instance.u0)
    return GalerkinSystem(m, x, instance.t, A, B, G, F, d0)


@dataclass(frozen=True, eq=False)
class CoefficientTrajectory:
    t: np.ndarray
    d: np.ndarray          # (nt+1, m)


def _lu(M):
    lu, piv = linalg.lu_factor(M, check_finite=True)
    if np.min(np.abs(np.diag(lu))) < PIVOT_TOL:
        raise SingularSystem(f"pivot below {PIVOT_TOL:g}")
    return lu, piv


def integrate(system: GalerkinSystem, T: float | None = None, nt: int | None = None) -> CoefficientTrajectory:
    """Implicit Euler on the instance's time grid."""
    t = system.t
    if T is not None and not np.isclose(T, t[-1]):
        raise ValueError(f"T={T} differs from the assembled horizon {t[-1]}")
    if nt is not None and nt != t.size - 1:
        raise ValueError(f"nt={nt} differs from the assembled grid ({t.size - 1})")
    steps = t.size - 1
    tau = float(t[-1]) / steps
    eye = np.eye(system.m)
    d = np.empty((steps + 1, system.m))
    d[0] = system.d0
    factor = None if system.time_dependent else _lu(eye + tau * system.matrix(0))
    for n in range(steps):
        fac = factor or _lu(eye + tau * system.matrix(n + 1))
        d[n + 1] = linalg.lu_solve(fac, d[n] + tau * system.load(n + 1))
    return CoefficientTrajectory(t, d)


def reconstruct(coeffs: CoefficientTrajectory, grid) -> SolutionTrajectory:
    x = np.asarray(grid, float)
    values = coeffs.d @ basis(coeffs.d.shape[1], x)
    return SolutionTrajectory(x, coeffs.t, values, 1.0, label="galerkin",
                              stats=dict(m=coeffs.d.shape[1]))


def write_coefficients_csv(coeffs: CoefficientTrajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "k", "d_k"])
        for tn, row in zip(coeffs.t, coeffs.d):
            for k, dk in enumerate(row, start=1):
                writer.writerow([repr(float(tn)), k, repr(float(dk))])
