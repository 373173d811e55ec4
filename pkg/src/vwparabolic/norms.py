"""Discrete energy norms and a priori estimate ratios.

Space integrals use the composite trapezoid rule, time integrals the
trapezoid rule over time nodes.  First spatial derivatives are differences
centered at cell midpoints (the exact derivative of the piecewise-linear
interpolant); second derivatives are the usual three-point/flux stencils.
``u_t`` uses forward differences with a backward difference at the last node.

Estimate ratios are ``lhs / rhs`` with the unknown constant set to one, so
they are meaningful only relative to each other (scaling, refinement and
uniformity checks), not as absolute inequalities.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .dist_calc import trapezoid_weights
from .fdsolver import SolutionTrajectory, _Factor
from .problem import RegularizedInstance, spatial_gradient

__all__ = [
    "EnergyReport", "ESTIMATES", "NormAccumulator", "energy_norms", "hneg_norm", "midpoint_dx_l2",
    "coefficient_norms", "estimate_sides", "check_estimate", "write_energy_csv",
]

log = logging.getLogger(__name__)

# energy: sup/L2 bounds for homogeneous boundary data, with ||u_t|| in H^-1
# regularity: ||u_t||, ||(a u_x)_x||, ||u_xx|| in L2 L2 (needs u0 in H^1)
# *_lifted: the same bounds with boundary data norms added (no H^-1 term)
ESTIMATES = ("energy", "regularity", "energy_lifted", "regularity_lifted")


@dataclass(frozen=True)
class EnergyReport:
    linf_l2: float          # max_t ||u||
    l2_h1: float            # ||u_x||_{L2 L2}
    weighted: float         # ||sqrt(q) u||_{L2 L2}
    dtu_l2: float           # ||u_t||_{L2 L2}
    dtu_hneg: float         # ||u_t||_{L2 H^-1}
    dx_a_dx: float          # ||(a u_x)_x||_{L2 L2}
    dxx: float              # ||u_xx||_{L2 L2}
    linf_h1: float          # max_t ||u_x||
    q_clip: float = 0.0     # magnitude of negative q clipped before the square root
    rhs_bound: float = math.nan
    ratio: float = math.nan
    estimate: str = ""

    @property
    def very_weak(self) -> float:
        """``||u_t||_{L2 L2} + ||u_xx||_{L2 L2}``, the moderateness quantity for solution nets."""
        return self.dtu_l2 + self.dxx

    def as_dict(self) -> dict:
        d = asdict(self)
        d["very_weak"] = self.very_weak
        return d


def _time_l2(sq: np.ndarray, t: np.ndarray) -> float:
    return float(math.sqrt(max(np.dot(trapezoid_weights(t), sq), 0.0)))


def midpoint_dx_l2(w, h: float) -> float:
    """L2 norm of the midpoint differences of ``w`` (full grid incl. boundary nodes)."""
    d = np.diff(np.asarray(w, float)) / h
    return float(math.sqrt(h * np.dot(d, d)))


def _laplacian(n: int, h: float) -> _Factor:
    main = np.full(n - 1, 2.0 / h**2)
    off = np.full(n - 1, -1.0 / h**2)
    return _Factor(off, main, off)


def _hneg(v: np.ndarray, h: float, lap: _Factor) -> float:
    if not np.any(v):
        return 0.0
    w = lap.solve(v)
    return midpoint_dx_l2(np.concatenate(([0.0], w, [0.0])), h)


def hneg_norm(v, h: float | None = None) -> float:
    """Discrete H^-1 norm ``||w_x||`` where ``-w_xx = v``, ``w(0) = w(1) = 0``.

    ``v`` holds values on the interior nodes only.
    """
    v = np.asarray(v, float)
    n = v.size + 1
    h = 1.0 / n if h is None else h
    return _hneg(v, h, _laplacian(n, h))


def _second_diff(u: np.ndarray, h: float, a: np.ndarray | None = None) -> np.ndarray:
    """Interior ``(a u_x)_x`` (or ``u_xx`` if ``a`` is None), linearly extrapolated to the ends.

    Works on single rows or on stacks of rows (last axis is space).
    """
    if a is None:
        inner = (u[..., 2:] - 2 * u[..., 1:-1] + u[..., :-2]) / h**2
    else:
        face = 0.5 * (a[..., 1:] + a[..., :-1])
        flux = face * np.diff(u, axis=-1) / h
        inner = np.diff(flux, axis=-1) / h
    left = 2 * inner[..., :1] - inner[..., 1:2]
    right = 2 * inner[..., -1:] - inner[..., -2:-1]
    return np.concatenate([left, inner, right], axis=-1)


class NormAccumulator:
    """Energy norms computed one time row at a time.

    Feed ``u^0, u^1, ..., u^nt`` in order through :meth:`add`; memory stays
    proportional to one row, so very fine grids fit.  :func:`energy_norms`
    is the same computation on a stored trajectory.
    """

    def __init__(self, instance: RegularizedInstance):
        self.instance = instance
        self.h, self.tau = instance.h, instance.tau
        self.wx = trapezoid_weights(instance.x)
        self.q = np.asarray(instance.q)
        self.q_pos = np.clip(self.q, 0.0, None)
        self.q_clip = float(max(0.0, -self.q.min()))
        if self.q_clip > 0:
            log.info("clipped negative q (magnitude %.3g) before the square root", self.q_clip)
        self._lap = _laplacian(instance.nx, self.h)
        self._prev = None
        self._rows = {k: [] for k in ("l2", "h1", "weighted", "dxadx", "dxx", "dtu", "hneg")}

    def add(self, u) -> None:
        inst, h, wx, r = self.instance, self.h, self.wx, self._rows
        u = np.asarray(u, float)
        if u.shape != (inst.nx + 1,):
            raise ValueError("row does not match the instance grid")
        n = len(r["l2"])
        if n > inst.nt:
            raise ValueError("more rows than time nodes")
        dx = np.diff(u) / h
        r["l2"].append(float((u * u) @ wx))
        r["h1"].append(float(h * dx @ dx))
        r["weighted"].append(float((self.q_pos * u * u) @ wx))
        r["dxadx"].append(float(_second_diff(u, h, inst.at("a", n)) ** 2 @ wx))
        r["dxx"].append(float(_second_diff(u, h) ** 2 @ wx))
        if self._prev is not None:
            du = (u - self._prev) / self.tau
            r["dtu"].append(float((du * du) @ wx))
            r["hneg"].append(_hneg(du[1:-1], h, self._lap) ** 2)
        self._prev = u

    def result(self) -> EnergyReport:
        r = self._rows
        t = self.instance.t
        if len(r["l2"]) != t.size:
            raise ValueError(f"fed {len(r['l2'])} rows, expected {t.size}")
        # the last node reuses the backward difference
        dtu = np.array(r["dtu"] + r["dtu"][-1:])
        hneg = np.array(r["hneg"] + r["hneg"][-1:])
        arr = {k: np.array(v) for k, v in r.items()}
        return EnergyReport(
            linf_l2=float(math.sqrt(arr["l2"].max())),
            l2_h1=_time_l2(arr["h1"], t),
            weighted=_time_l2(arr["weighted"], t),
            dtu_l2=_time_l2(dtu, t),
            dtu_hneg=_time_l2(hneg, t),
            dx_a_dx=_time_l2(arr["dxadx"], t),
            dxx=_time_l2(arr["dxx"], t),
            linf_h1=float(math.sqrt(arr["h1"].max())),
            q_clip=self.q_clip,
        )


def energy_norms(traj: SolutionTrajectory, instance: RegularizedInstance) -> EnergyReport:
    u = np.asarray(traj.values)
    if u.shape != (instance.nt + 1, instance.nx + 1):
        raise ValueError("trajectory does not match the instance grid")
    acc = NormAccumulator(instance)
    for row in u:
        acc.add(row)
    return acc.result()


def _h1_time(g: np.ndarray, t: np.ndarray) -> float:
    tau = t[1] - t[0]
    dg = np.gradient(g, tau)
    return _time_l2(g**2 + dg**2, t)


def _row_l2_sq(arr, wx) -> np.ndarray:
    """Squared L2 norm in x of each time row (fields may lack an x axis)."""
    arr = np.asarray(arr, float)
    if arr.shape[-1] == 1:
        return arr[:, 0] ** 2 * wx.sum()
    return (arr**2) @ wx


def coefficient_norms(instance: RegularizedInstance) -> dict:
    """Sup-norms of coefficients and data norms entering the estimates."""
    a = np.asarray(instance.a)
    b = np.asarray(instance.b)
    wx = trapezoid_weights(instance.x)
    t = instance.t
    f_sq = np.broadcast_to(_row_l2_sq(instance.f, wx), t.shape)
    dta = np.gradient(a, instance.tau, axis=0) if instance.is_time_dependent("a") else np.zeros(1)
    return dict(
        alpha=instance.alpha,
        T=instance.T,
        a_inf=float(np.max(np.abs(a))),
        b_inf=float(np.max(np.abs(b))),
        q_inf=float(np.max(np.abs(instance.q))),
        dxb_inf=float(np.max(np.abs(spatial_gradient(b, instance.h)))),
        dxa_inf=float(np.max(np.abs(spatial_gradient(a, instance.h)))),
        dta_inf=float(np.max(np.abs(dta))),
        a_linf_l2=float(math.sqrt(np.max(_row_l2_sq(a, wx)))),
        u0_l2=float(math.sqrt(np.dot(wx, instance.u0**2))),
        u0_h1=midpoint_dx_l2(instance.u0, instance.h),
        f_l2=_time_l2(f_sq, t),
        g0_h1=_h1_time(np.asarray(instance.g0), t),
        g1_h1=_h1_time(np.asarray(instance.g1), t),
    )


def estimate_sides(report: EnergyReport, instance: RegularizedInstance, which: str):
    """``(lhs, rhs)`` of the chosen estimate with the constant set to one.

    For the bracketed estimates each member is compared with the same
    right-hand side; ``lhs`` is the largest member.
    """
    c = coefficient_norms(instance)
    alpha = c["alpha"]
    sa = math.sqrt(alpha)
    growth = math.exp(c["T"] * c["dxb_inf"])
    if which == "energy":
        lhs = report.linf_l2 + sa * report.l2_h1 + report.weighted + report.dtu_hneg
        coef = 1 + c["a_inf"] / sa + c["b_inf"] + math.sqrt(c["q_inf"])
        rhs = growth * coef * (c["u0_l2"] + c["f_l2"])
    elif which == "energy_lifted":
        lhs = report.linf_l2 + sa * report.l2_h1 + report.weighted
        coef = 1 + math.sqrt(c["a_inf"]) + math.sqrt(c["q_inf"])
        rhs = growth * coef * (c["u0_l2"] + c["f_l2"] + c["g0_h1"] + c["g1_h1"])
    elif which in ("regularity", "regularity_lifted"):
        first = (math.sqrt(c["a_linf_l2"]) + c["q_inf"]
                 + (math.sqrt(c["dta_inf"]) + c["dxa_inf"] + c["b_inf"]) / sa)
        second = 1 + (c["a_inf"] + c["b_inf"]) / sa + math.sqrt(c["q_inf"])
        if which == "regularity":
            members = [report.dtu_l2, math.sqrt(2 * alpha) * report.linf_h1, report.dx_a_dx, report.dxx]
            data = c["u0_h1"] + c["f_l2"]
        else:
            members = [report.dtu_l2, report.dx_a_dx, report.dxx]
            data = c["u0_h1"] + c["f_l2"] + c["g0_h1"] + c["g1_h1"]
        lhs = max(members)
        rhs = growth * first * second * data / alpha
    else:
        raise ValueError(f"unknown estimate {which!r}; choose from {ESTIMATES}")
    return lhs, rhs


def check_estimate(report: EnergyReport, instance: RegularizedInstance, which: str) -> float:
    """``lhs / rhs``; zero when both sides vanish."""
    lhs, rhs = estimate_sides(report, instance, which)
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else math.inf
    return lhs / rhs


def with_estimate(report: EnergyReport, instance: RegularizedInstance, which: str) -> EnergyReport:
    lhs, rhs = estimate_sides(report, instance, which)
    return replace(report, rhs_bound=rhs, ratio=check_estimate(report, instance, which), estimate=which)


def write_energy_csv(rows, path) -> None:
    """One row per run; ``rows`` are ``(label, epsilon, EnergyReport)`` triples."""
    names = [f.name for f in fields(EnergyReport)] + ["very_weak"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", "epsilon"] + names)
        for label, eps, rep in rows:
            d = rep.as_dict()
            writer.writerow([label, "" if eps is None else repr(float(eps))]
                            + [d[n] if isinstance(d[n], str) else repr(float(d[n])) for n in names])
