import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vwparabolic import (Constant, Delta, EllipticityViolated, ProblemSpec, ResolutionInsufficient,
                         Smooth, builtin_case, build_instance, default_net, in_t, in_x, lift,
                         lifted_instance, product, sample_instance, validate)
from vwparabolic.problem import required_grid

NET = default_net()
PEAK = NET.c * np.exp(-1.0)


def test_validate_constant_and_positive_delta():
    assert validate(ProblemSpec(), NET).ok
    assert validate(ProblemSpec(a=in_x(Constant(1.0) + Delta(0.45, 1.0))), NET).ok


def test_validate_negative_delta():
    spec = ProblemSpec(a=in_x(Constant(1.0) + Delta(0.45, -2.0)))
    with pytest.raises(EllipticityViolated):
        validate(spec, NET.with_epsilons([0.1]))
    report = validate(spec, NET.with_epsilons([0.1]), raise_errors=False)
    assert not report.ok
    assert report.min_a[0.1] == pytest.approx(1 - 2 * PEAK / 0.1, rel=1e-3)


def test_validate_resolution():
    with pytest.raises(ResolutionInsufficient, match="nx=20"):
        validate(builtin_case(2), NET.with_epsilons([0.1]), nx=20, nt=40)
    assert required_grid(1.0, 0.1) == (40, 40)
    assert required_grid(1.0, 0.003) == (1334, 1334)


def test_peclet_warning():
    spec = ProblemSpec(b=in_x(Constant(200.0)))
    with pytest.warns(RuntimeWarning, match="Peclet"):
        report = validate(spec, NET.with_epsilons([0.1]), nx=40, nt=40)
    assert report.ok and report.peclet[0.1] > 1


def test_case1_fields_constant():
    inst = build_instance(builtin_case(1), NET, 0.1, 64, 64)
    for name in ("a", "b", "q"):
        assert np.allclose(inst.full(name), 1.0)


def test_case2_single_peak():
    inst = build_instance(builtin_case(2), NET, 0.1, 200, 40)
    a = np.asarray(inst.a).ravel()
    assert inst.x[np.argmax(a)] == pytest.approx(0.45)
    interior = a > 1.0
    assert np.all(np.diff(np.flatnonzero(interior)) == 1)


def test_case5_boundary_sifting():
    inst = build_instance(builtin_case(5), NET, 0.05, 80, 200)
    assert np.allclose(inst.g1, NET.kernel(inst.t - 0.45, 0.05), atol=1e-12)
    assert np.all(inst.g0 == 0)


def test_time_only_fields_keep_narrow_shape():
    inst = build_instance(builtin_case(3), NET, 0.1, 40, 40)
    assert np.asarray(inst.b).shape == (41, 1)
    assert inst.at("b", 20).shape == (41,)
    assert inst.is_time_dependent("b") and not inst.is_time_dependent("a")


def test_lift_zero_boundary():
    inst = build_instance(builtin_case(1), NET, 0.1, 40, 40)
    _, f_tilde, w0 = lift(inst)
    assert np.allclose(f_tilde, inst.full("f")) and np.allclose(w0, inst.u0)


def test_lift_constant_boundary():
    spec = ProblemSpec(g0=Constant(1.0), g1=Constant(1.0), u0=Constant(1.0))
    inst = sample_instance(spec, 32, 32)
    lifting, f_tilde, w0 = lift(inst)
    assert np.allclose(f_tilde, 0.0) and np.allclose(lifting.psi, 1.0) and np.allclose(w0, 0.0)


def test_lift_linear_boundary():
    spec = ProblemSpec(q=Constant(1.0), g1=Smooth(lambda t: t))
    inst = sample_instance(spec, 50, 40)
    _, f_tilde, _ = lift(inst)
    X, Tt = np.meshgrid(inst.x, inst.t)
    assert np.allclose(f_tilde, -X - X * Tt, atol=1e-8)


def test_lifted_instance_restores():
    spec = ProblemSpec(u0=Smooth(lambda x: 1 + x), g0=Constant(1.0), g1=Smooth(lambda t: 2 + 0 * t))
    inst = sample_instance(spec, 16, 16)
    w_inst, lifting = lifted_instance(inst)
    assert w_inst.has_zero_boundary()
    assert np.allclose(lifting.restore(w_inst.u0[None, :])[0], inst.u0)


def test_build_is_deterministic():
    a = build_instance(builtin_case(4), NET, 0.05, 100, 100)
    b = build_instance(builtin_case(4), NET, 0.05, 100, 100)
    assert np.array_equal(a.q, b.q) and np.array_equal(a.u0, b.u0)


def test_spec_rejects_double_singular_product():
    with pytest.raises(ValueError):
        ProblemSpec(f=product(Delta(0.5), Delta(0.5)))
    with pytest.raises(ValueError):
        ProblemSpec(q=Delta(1.5))


def test_singular_axes():
    assert builtin_case(1).singular_axes() == set()
    assert builtin_case(2).singular_axes() == {"x"}
    assert builtin_case(3).singular_axes() == {"t"}
    assert builtin_case(5).singular_axes() == {"t"}


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 3))
@settings(max_examples=25, deadline=None)
def test_lift_is_linear_in_boundary_data(c0, c1, lam):
    def f_tilde(g0, g1):
        spec = ProblemSpec(a=in_x(Smooth(lambda x: 1 + x)), b=in_x(Constant(0.5)), q=Constant(2.0),
                           g0=Smooth(lambda t: g0 * np.cos(t)), g1=Smooth(lambda t: g1 * t))
        return lift(sample_instance(spec, 16, 8))[1]
    assert np.allclose(f_tilde(lam * c0, lam * c1), lam * f_tilde(c0, c1), atol=1e-12)


def test_scaled_data_scales_instance():
    spec = builtin_case(5)
    inst = build_instance(spec, NET, 0.1, 40, 40)
    big = build_instance(spec.scaled_data(3.0), NET, 0.1, 40, 40)
    assert np.allclose(big.u0, 3 * inst.u0) and np.allclose(big.g1, 3 * inst.g1)
    assert np.array_equal(big.a, inst.a)


def test_time_delta_coefficient():
    inst = build_instance(ProblemSpec(b=in_t(Constant(1.0) + Delta(0.5))), NET, 0.1, 40, 80)
    b = np.asarray(inst.b)[:, 0]
    assert inst.t[np.argmax(b)] == pytest.approx(0.5)
