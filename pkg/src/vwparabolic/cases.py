"""The five built-in experiments: one singular ingredient per case.

=====  =========================  ==============  =============
case   singular ingredient        text location   figure text
=====  =========================  ==============  =============
1      none (a = b = q = 1)       -               -
2      a = 1 + delta(x - x0)      x0 = 0.45       0.45
3      b = 1 + delta(t - t0)      t0 = 0.5        0.25
4      q = 1 + delta(x - x0)      x0 = 0.45       0.6
5      g1 = delta(t - t0)         t0 = 0.45       0.25
=====  =========================  ==============  =============

The case list is the default; ``location=`` runs the figure variant.
"""
from __future__ import annotations

import numpy as np

from .dist_calc import Constant, Delta, Smooth
from .problem import ProblemSpec, in_t, in_x

__all__ = ["UnknownCase", "CASE_IDS", "DEFAULT_LOCATIONS", "FIGURE_LOCATIONS",
           "initial_profile", "builtin_case"]

CASE_IDS = (1, 2, 3, 4, 5)
DEFAULT_LOCATIONS = {2: 0.45, 3: 0.5, 4: 0.45, 5: 0.45}
FIGURE_LOCATIONS = {2: 0.45, 3: 0.25, 4: 0.6, 5: 0.25}
SNAPSHOT_TIMES = (0.0, 0.125, 0.25, 0.5, 1.0)


class UnknownCase(ValueError):
    pass


def _u0(x):
    return np.exp(1.0 / ((x - 0.5) ** 2 + 0.025))


def initial_profile() -> Smooth:
    """``exp(1 / ((x - 0.5)^2 + 0.025))``; peaks at e^40 ~ 2.35e17 at x = 0.5."""
    return Smooth(_u0, label="exp(1/((x-0.5)^2+0.025))")


def builtin_case(case_id: int, location: float | None = None, T: float = 1.0) -> ProblemSpec:
    if case_id not in CASE_IDS:
        raise UnknownCase(f"unknown case {case_id!r}; choose from {CASE_IDS}")
    one = Constant(1.0)
    loc = DEFAULT_LOCATIONS.get(case_id) if location is None else float(location)
    a, b, q, g1 = in_x(one), in_x(one), one, Constant(0.0)
    if case_id == 2:
        a = in_x(one + Delta(loc))
    elif case_id == 3:
        b = in_t(one + Delta(loc))
    elif case_id == 4:
        q = one + Delta(loc)
    elif case_id == 5:
        g1 = Delta(loc)
    return ProblemSpec(a=a, b=b, q=q, f=in_x(Constant(0.0)), u0=initial_profile(),
                       g0=Constant(0.0), g1=g1, T=T, alpha=1.0, name=f"case{case_id}")
