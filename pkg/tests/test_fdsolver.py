import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vwparabolic import (Constant, ProblemSpec, SchemeConfig, Smooth, builtin_case, build_instance,
                         default_net, in_x, march, sample_instance, solve, solve_lifted)
from vwparabolic.dist_calc import trapezoid_weights
from vwparabolic.fdsolver import discretize_operator, step, write_trajectory_csv, SingularSystem, tridiagonal_solve

from sample_problems import heat_exact, heat_spec, mms_exact, mms_spec

PI = np.pi


def l2(v, x):
    return float(np.sqrt(trapezoid_weights(x) @ v**2))


def l2l2(err, x, t):
    return float(np.sqrt(trapezoid_weights(t) @ ((err**2) @ trapezoid_weights(x))))


def test_operator_linear_profile():
    inst = sample_instance(heat_spec(), 8, 4)
    assert np.allclose(discretize_operator(inst, 0).apply(1 + 2 * inst.x)[1:-1], 0.0, atol=1e-12)


def test_operator_eigenvalue():
    inst = sample_instance(heat_spec(), 8, 4)
    u = np.sin(PI * inst.x)
    lam = 4 / inst.h**2 * np.sin(PI * inst.h / 2) ** 2
    assert np.allclose(discretize_operator(inst, 0).apply(u)[1:-1], lam * u[1:-1], rtol=1e-13)


def test_operator_constant_profile():
    spec = ProblemSpec(a=in_x(Constant(1.0)), b=in_x(Constant(1.0)), q=Constant(1.0))
    inst = sample_instance(spec, 8, 4)
    assert np.allclose(discretize_operator(inst, 0).apply(np.ones(9))[1:-1], 1.0)


def test_step_zero_and_steady():
    inst = sample_instance(ProblemSpec(), 16, 4)
    assert np.all(step(np.zeros(17), inst) == 0)
    steady = sample_instance(ProblemSpec(g0=Constant(1.0), g1=Constant(1.0), u0=Constant(1.0)), 16, 4)
    assert np.allclose(step(np.ones(17), steady), 1.0, atol=1e-14)


def test_step_heat_mode():
    inst = sample_instance(heat_spec(), 32, 10)
    lam = 4 / inst.h**2 * np.sin(PI * inst.h / 2) ** 2
    u1 = step(inst.u0, inst, SchemeConfig(1.0))
    assert np.allclose(u1, inst.u0 / (1 + inst.tau * lam), atol=1e-13)


def test_theta_range():
    with pytest.raises(ValueError):
        SchemeConfig(0.3)


def test_singular_pivot():
    with pytest.raises(SingularSystem):
        tridiagonal_solve([0, 1, 0], [1.0, 1, 1], [1, 0, 0], [1.0, 1, 1])


def test_heat_accuracy():
    inst = sample_instance(heat_spec(), 256, 4096)
    u = solve(inst, SchemeConfig(1.0))
    err = l2(u.values[-1] - heat_exact([1.0], inst.x)[0], inst.x)
    assert err <= 1e-3


def _heat_err(nx, nt, theta):
    inst = sample_instance(heat_spec(0.1), nx, nt)
    u = solve(inst, SchemeConfig(theta))
    return l2(u.values[-1] - heat_exact([0.1], inst.x)[0], inst.x)


def _orders(errs):
    return np.log2(np.array(errs[:-1]) / np.array(errs[1:]))


def test_heat_orders():
    space = _orders([_heat_err(n, 4 * n * n // 16, 0.5) for n in (16, 32, 64)])
    euler = _orders([_heat_err(512, n, 1.0) for n in (20, 40, 80)])
    cn = _orders([_heat_err(1024, n, 0.5) for n in (10, 20, 40)])
    assert np.all((space >= 1.8) & (space <= 2.2)), space
    assert np.all((euler >= 0.9) & (euler <= 1.1)), euler
    assert np.all((cn >= 1.8) & (cn <= 2.2)), cn


def test_manufactured_spatial_order():
    errs = []
    for nx in (32, 64, 128):
        inst = sample_instance(mms_spec(), nx, nx)
        u = solve_lifted(inst, SchemeConfig(0.5))
        errs.append(l2l2(u.values - mms_exact(inst.t, inst.x), inst.x, inst.t))
    assert np.all(_orders(errs) >= 1.9)


def test_lifted_and_direct_agree_to_first_order():
    gaps = []
    for n in (64, 128):
        inst = sample_instance(mms_spec(), n, n)
        gaps.append(np.abs(solve(inst).values - solve_lifted(inst).values).max())
    assert gaps[0] < 2e-3 and 1.8 < gaps[0] / gaps[1] < 2.2


@given(st.sampled_from([0.5, 1.0]), st.integers(0, 10_000))
@settings(max_examples=10, deadline=None)
def test_energy_dissipation(theta, seed):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1, 1, 4)
    spec = ProblemSpec(a=in_x(Smooth(lambda x: 1 + 0.5 * np.sin(3 * x + c[0]) ** 2)),
                       q=Smooth(lambda x: (c[1] * x) ** 2),
                       u0=Smooth(lambda x: np.sin(PI * x) + c[2] * np.sin(2 * PI * x) + c[3] * np.sin(5 * PI * x)))
    inst = sample_instance(spec, 64, 50)
    u = solve(inst, SchemeConfig(theta))
    norms = np.sqrt((u.values**2) @ trapezoid_weights(inst.x))
    assert np.all(np.diff(norms) <= 1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=10, deadline=None)
def test_maximum_principle(seed):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1, 1, 4)
    spec = ProblemSpec(a=in_x(Smooth(lambda x: 1.2 + np.cos(4 * x + c[0]))),
                       q=Smooth(lambda x: c[1] ** 2 * x),
                       u0=Smooth(lambda x: c[2] + c[3] * np.sin(3 * PI * x)),
                       g0=Constant(c[2]), g1=Constant(c[2] + c[3] * np.sin(3 * PI)), alpha=0.19)
    inst = sample_instance(spec, 48, 40)
    u = solve(inst, SchemeConfig(1.0))
    for n in range(inst.nt):
        # q >= 0 bounds the positive part only
        bound = max(u.values[n].max(), inst.g0[n + 1], inst.g1[n + 1], 0.0)
        assert u.values[n + 1].max() <= bound + 1e-12


def test_march_matches_solve():
    inst = build_instance(builtin_case(3), default_net(), 0.1, 40, 40)
    rows = np.array([row for _, row in march(inst)])
    assert np.array_equal(rows, solve(inst).values)


def test_case1_decays_and_drifts():
    inst = build_instance(builtin_case(1), default_net(), 0.3, 200, 200)
    u = solve(inst)
    peaks = u.values.max(axis=1)
    where = u.x[u.values.argmax(axis=1)]
    assert np.all(np.diff(peaks) < 0)
    assert np.all(np.diff(where) >= 0) and where[-1] > where[0]


def test_trajectory_csv(tmp_path):
    inst = sample_instance(heat_spec(), 4, 2)
    path = tmp_path / "u.csv"
    write_trajectory_csv(solve(inst), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x,u" and len(lines) == 1 + 3 * 5
    assert lines[1].startswith("0.0,0.0,")
