"""Problem definitions shared by several test modules."""
import numpy as np

from vwparabolic import Constant, ProblemSpec, Smooth, in_x, product

PI = np.pi


def heat_spec(T=1.0):
    """u_t = u_xx with u0 = sin(pi x); exact solution exp(-pi^2 t) sin(pi x)."""
    return ProblemSpec(a=in_x(Constant(1.0)), b=in_x(Constant(0.0)), q=Constant(0.0),
                       u0=Smooth(lambda x: np.sin(PI * x)), T=T, name="heat")


def heat_exact(t, x):
    return np.exp(-PI**2 * np.asarray(t))[:, None] * np.sin(PI * np.asarray(x))[None, :]


def smooth_spec():
    """Variable smooth coefficients, no singular data."""
    return ProblemSpec(a=in_x(Smooth(lambda x: 1.5 + 0.5 * np.sin(2 * PI * x))),
                       b=in_x(Smooth(lambda x: np.cos(PI * x))),
                       q=Smooth(lambda x: 1 + x**2), f=in_x(Smooth(lambda x: np.exp(-x))),
                       u0=Smooth(lambda x: np.sin(PI * x)), name="smooth")


# manufactured solution u = exp(-t) S(x) with inhomogeneous boundary values
def _a(x): return 1 + 0.5 * x**2
def _da(x): return x
def _b(x): return np.sin(2 * PI * x)
def _q(x): return 1 + np.cos(PI * x)
def mms_profile(x): return np.sin(PI * x) + 1 + x
def _dS(x): return PI * np.cos(PI * x) + 1
def _ddS(x): return -PI**2 * np.sin(PI * x)


def _source(x):
    return -mms_profile(x) - (_da(x) * _dS(x) + _a(x) * _ddS(x)) + _b(x) * _dS(x) + _q(x) * mms_profile(x)


def mms_spec():
    decay = Smooth(lambda t: np.exp(-t))
    return ProblemSpec(a=in_x(Smooth(_a)), b=in_x(Smooth(_b)), q=Smooth(_q),
                       f=product(decay, Smooth(_source)), u0=Smooth(mms_profile),
                       g0=Smooth(lambda t: np.exp(-t)), g1=Smooth(lambda t: 2 * np.exp(-t)), name="mms")


def mms_exact(t, x):
    return np.exp(-np.asarray(t))[:, None] * mms_profile(np.asarray(x))[None, :]


def random_spec(rng, boundary=False):
    """Random smooth problem with a >= alpha > 0 and q >= 1."""
    c = rng.uniform(-0.5, 0.5, size=(6, 3))

    def sines(k):
        return lambda x: sum(c[k, j] * np.sin((j + 1) * PI * x) for j in range(3))

    def cosines(k):
        return lambda x: sum(c[k, j] * np.cos((j + 1) * PI * x) for j in range(3))

    alpha = rng.uniform(0.5, 2.0)
    amp = rng.uniform(0.0, 1.0)
    wave_a, wave_q = cosines(0), sines(2)
    g0 = g1 = Constant(0.0)
    if boundary:
        g0 = Smooth(lambda t, v=c[5, 0]: v * np.sin(2 * PI * t))
        g1 = Smooth(lambda t, v=c[5, 1]: v * (1 - np.exp(-t)))
    return ProblemSpec(a=in_x(Smooth(lambda x: alpha + amp * (1 + wave_a(x)) ** 2)),
                       b=in_x(Smooth(cosines(1))),
                       q=Smooth(lambda x: 1 + wave_q(x) ** 2),
                       f=product(Smooth(lambda t: np.cos(3 * t)), Smooth(sines(3))),
                       u0=Smooth(sines(4)), g0=g0, g1=g1, alpha=alpha, name="random")
