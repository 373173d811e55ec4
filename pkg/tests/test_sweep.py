import numpy as np
import pytest

from vwparabolic import (Constant, Delta, FitUnreliable, GridPolicy, builtin_case, compare_nets,
                         consistency_test, cosine_net, default_net, fit_power_law, mollify, run_sweep)
from vwparabolic.dist_calc import linf_norm
from vwparabolic.sweep import write_fit_csv, write_sweep_csv

from sample_problems import smooth_spec

LADDER = (0.3, 0.1, 0.05, 0.031, 0.003)


def test_fit_exact_power_law():
    eps = np.array(LADDER)
    fit = fit_power_law(eps, 3.0 * eps**-1.5)
    assert fit.exponent == pytest.approx(1.5, abs=1e-12)
    assert fit.constant == pytest.approx(3.0, rel=1e-10)
    assert fit.r2 == pytest.approx(1.0) and fit.reliable


def test_fit_background_model():
    eps = np.array(LADDER)
    vals = 5.0 + 2.0 * eps**-0.8
    fit = fit_power_law(eps, vals, background=True)
    assert fit.exponent == pytest.approx(0.8, abs=1e-6)
    assert fit.background == pytest.approx(5.0, rel=1e-5)
    assert fit_power_law(eps, vals).exponent < 0.8


def test_fit_flat_and_degenerate():
    flat = fit_power_law(LADDER, [1.0, 1.001, 1.002, 1.0, 1.01])
    assert flat.flat and flat.exponent == 0 and flat.r2 == 1
    few = fit_power_law(LADDER, [0, 0, 0, 0, 1.0])
    assert few.n_points == 1 and not few.reliable


def test_fit_decay_order():
    eps = np.array(LADDER)
    assert fit_power_law(eps, eps**2).order == pytest.approx(2.0)


@pytest.mark.parametrize("expr", [Delta(0.5), Constant(1.0) + Delta(0.45)])
def test_singular_coefficients_are_moderate(expr):
    x = np.linspace(0, 1, 200001)
    net = default_net()
    vals = [linf_norm(mollify(expr, net, e, x)) for e in net.epsilons]
    fit = fit_power_law(net.epsilons, vals, background=True)
    assert abs(fit.exponent - 1) <= 0.05 and fit.r2 >= 0.98


def test_grid_policy():
    assert GridPolicy().grid(1.0, 0.1) == (256, 256)
    assert GridPolicy(nx_min=2, nt_min=2).grid(1.0, 0.1) == (40, 40)
    assert GridPolicy(nx_min=2, nt_min=2, x_refine=4).grid(1.0, 0.1) == (160, 40)
    grids = GridPolicy(nx_min=2, nt_min=2, shared="time").grids(1.0, (0.1, 0.05))
    assert grids == {0.1: (40, 80), 0.05: (80, 80)}
    assert GridPolicy(shared="all").grids(1.0, (0.1, 0.003))[0.1] == (1334, 1334)
    with pytest.raises(ValueError):
        GridPolicy(shared="some")


def test_case1_sweep_flat():
    net = default_net((0.3, 0.1, 0.05))
    report = run_sweep(builtin_case(1), net, GridPolicy(nx_min=100, nt_min=100))
    fit = report.fits["very_weak"]
    assert fit.exponent == 0 and fit.reliable
    assert report.classification["very_weak"].startswith("moderate")


def test_case3_sweep_note_and_trajectories():
    net = default_net((0.3, 0.1))
    report = run_sweep(builtin_case(3), net, GridPolicy(nx_min=40, nt_min=40), keep_trajectories=True)
    assert any("time-singular" in n for n in report.notes)
    assert report.trajectories[0].values.shape == (41, 41)
    assert report.reports[0].very_weak == pytest.approx(report.table["very_weak"][0])


def test_unshared_coarse_grids_give_unreliable_fit():
    # per-epsilon coarse grids mix discretization error into the ladder
    net = default_net((0.3, 0.1, 0.05, 0.031))
    with pytest.raises(FitUnreliable) as info:
        run_sweep(builtin_case(1), net, GridPolicy(nx_min=2, nt_min=2, shared="none"), strict=True)
    assert info.value.report.fits["very_weak"].r2 < 0.98
    shared = run_sweep(builtin_case(1), net, GridPolicy(nx_min=2, nt_min=2, shared="all"), strict=True)
    assert shared.fits["very_weak"].reliable


def test_single_epsilon_has_no_fit():
    report = run_sweep(builtin_case(1), default_net((0.1,)), GridPolicy(nx_min=40, nt_min=40))
    assert report.fits == {} and len(report.table["very_weak"]) == 1
    cons = consistency_test(smooth_spec(), default_net((0.1,)), GridPolicy(nx_min=64, nt_min=64))
    assert cons.fit is None and len(cons.errors) == 1


def test_compare_nets_symmetry_and_identity():
    net_a, net_b = default_net((0.3, 0.1)), cosine_net((0.3, 0.1))
    policy = GridPolicy(nx_min=64, nt_min=64)
    ab = compare_nets(smooth_spec(), net_a, net_b, policy)
    ba = compare_nets(smooth_spec(), net_b, net_a, policy)
    assert ab.table == ba.table
    same = compare_nets(builtin_case(4), net_a, net_a, policy)
    assert all(v == 0 for vals in same.table.values() for v in vals)


def test_compare_nets_needs_shared_ladder():
    with pytest.raises(ValueError):
        compare_nets(smooth_spec(), default_net((0.3, 0.1)), cosine_net((0.3,)))


def test_consistency_rejects_singular():
    with pytest.raises(ValueError):
        consistency_test(builtin_case(2), default_net())


def test_sweep_csv(tmp_path):
    write_sweep_csv([0.3, 0.1], {"dxx": [1.0, 2.0]}, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines() == [
        "epsilon,norm_name,value", "0.3,dxx,1.0", "0.1,dxx,2.0"]
    write_fit_csv({"dxx": fit_power_law([0.3, 0.1], [1.0, 3.0])}, tmp_path / "f.csv", {"dxx": "moderate(N=1.000)"})
    rows = (tmp_path / "f.csv").read_text().splitlines()
    assert rows[0].startswith("norm_name,exponent") and rows[1].endswith("moderate(N=1.000)")


def test_worker_cap(monkeypatch):
    from vwparabolic.sweep import worker_count
    monkeypatch.setenv("VW_THREADS", "1")
    assert worker_count(5) == 1
    monkeypatch.setenv("VW_THREADS", "8")
    assert worker_count(3) == 3
