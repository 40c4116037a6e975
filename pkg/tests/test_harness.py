import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairdyn.errors import ConfigError
from fairdyn.harness import compare, detect_convergence, run_trajectory, sweep_grid
from fairdyn.interventions import InterventionSpec, laissez_faire_policy
from fairdyn.state import CoordState, from_coords

import oracles as o
from conftest import make_scenario

S0 = np.array([0.6, 0.4])
GI = InterventionSpec()
LZ = InterventionSpec("laissez_faire")
DP = InterventionSpec("demographic_parity")
FC = InterventionSpec("feedback_control", epsilon=0.05)


def test_fixed_point_stays_put(setting1):
    s = np.full(2, o.S1_SBAR_PLUS)
    recs = run_trajectory(setting1, s, 1000, 1000)
    assert np.max(np.abs(recs[-1].s - s)) < 1e-9


def test_symmetric_start_stays_symmetric(setting1):
    recs = run_trajectory(setting1, np.full(2, 0.7), 300, 1)
    assert all(r.s[0] == r.s[1] for r in recs)


def test_group_independent_reaches_hyperplane(setting1):
    rec = run_trajectory(setting1, S0, 10_000, 10_000)[-1]
    assert rec.s_bar == pytest.approx(o.S1_SBAR_PLUS, abs=1e-3)
    assert rec.eo_satisfied


def test_stride_and_final_record(setting1):
    recs = run_trajectory(setting1, S0, 25, 10)
    assert [r.t for r in recs] == [0, 10, 20, 25]
    assert np.array_equal(recs[0].s, S0)


def test_recorded_policy_belongs_to_recorded_state(setting1):
    recs = run_trajectory(setting1.with_intervention(LZ), S0, 3, 1)
    for r in recs:
        assert np.array_equal(r.phi, laissez_faire_policy(setting1.d, setting1.V, setting1.mu, r.s))


def test_trajectory_is_deterministic(setting2):
    a = run_trajectory(setting2, S0, 200, 7)
    b = run_trajectory(setting2, S0, 200, 7)
    assert all(np.array_equal(x.s, y.s) and np.array_equal(x.phi, y.phi) for x, y in zip(a, b))


def test_invalid_run_arguments(setting1):
    with pytest.raises(ValueError):
        run_trajectory(setting1, S0, 0)
    with pytest.raises(ValueError):
        run_trajectory(setting1, S0, 10, 0)


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_state_stays_in_unit_box(a, b):
    sc = make_scenario(o.SETTING2_U, o.SETTING2_V)
    for r in run_trajectory(sc, np.array([a, b]), 60, 1):
        assert np.all((r.s >= 0) & (r.s <= 1))


def test_parity_records_equal_rates(setting1):
    recs = run_trajectory(setting1.with_intervention(DP), S0, 4, 1)
    for r in recs:
        assert np.ptp(r.acc) < 1e-9
        assert r.dp_satisfied


# convergence


def test_convergence_constant_trajectory(setting1):
    s = np.full(2, o.S1_SBAR_PLUS)
    recs = run_trajectory(setting1, s, 50, 1)
    rep = detect_convergence(recs, 20, 1e-12, setting1)
    assert rep.converged and rep.steps_to_convergence <= 50
    assert rep.nearest == "internal_hyperplane" and rep.hyperplane == "plus"


def test_convergence_on_plus_hyperplane(setting1):
    recs = run_trajectory(setting1, S0, 10_000, 1, stop_after=(100, 1e-10))
    rep = detect_convergence(recs, 100, 1e-10, setting1)
    assert rep.converged
    assert rep.nearest == "internal_hyperplane" and rep.hyperplane == "plus"
    assert recs[-1].t < 10_000


def test_convergence_to_vertex():
    sc = make_scenario(o.SETTING3_U, o.SETTING3_V)
    recs = run_trajectory(sc, np.array([0.2, 0.1]), 20_000, 1, stop_after=(100, 1e-10))
    rep = detect_convergence(recs, 100, 1e-10, sc)
    assert rep.converged
    assert rep.nearest == "trivial_vertex"
    assert np.all(rep.limit_state < 1e-9)


def test_unconverged_report(setting1):
    recs = run_trajectory(setting1, S0, 5, 1)
    rep = detect_convergence(recs, 5, 1e-12, setting1)
    assert not rep.converged and rep.steps_to_convergence is None


def test_window_too_long(setting1):
    with pytest.raises(ValueError):
        detect_convergence(run_trajectory(setting1, S0, 3, 1), 10)


# sweeps


def test_sweep_grid_layout(setting1):
    res = sweep_grid(setting1, 4, threads=1)
    assert res.s1.tolist() == [0.125, 0.375, 0.625, 0.875]
    rows = list(res.rows())
    assert len(rows) == 16
    assert rows[1][:2] == (0.125, 0.375)


def test_sweep_diagonal_moves_along_diagonal(setting1):
    res = sweep_grid(setting1, 8, threads=1)
    for i in range(8):
        assert res.ds[i, i, 0] == res.ds[i, i, 1]


def test_sweep_parity_reflection_symmetry(setting1):
    res = sweep_grid(setting1.with_intervention(DP), 6, threads=1)
    np.testing.assert_allclose(res.ds[:, :, 0], res.ds.transpose(1, 0, 2)[:, :, 1], atol=1e-9)


def test_sweep_laissez_faire_group_one_ignores_group_two(setting1):
    res = sweep_grid(setting1.with_intervention(LZ), 6, threads=1)
    for i in range(6):
        assert np.ptp(res.ds[i, :, 0]) == 0
        assert np.ptp(res.acc1[i, :]) == 0


def test_sweep_rejects_three_groups():
    sc = make_scenario(mu=(0.3, 0.3, 0.4))
    with pytest.raises(ConfigError):
        sweep_grid(sc, 4)


@pytest.mark.parametrize("threads", [2, 5])
def test_sweep_independent_of_thread_count(setting1, threads):
    a = sweep_grid(setting1.with_intervention(FC), 7, threads=1)
    b = sweep_grid(setting1.with_intervention(FC), 7, threads=threads)
    assert list(a.rows()) == list(b.rows())


# comparison


def test_compare_identical_rows(setting1):
    rows = compare(setting1, [GI, GI], S0, 400, 50, 1e-10)
    assert rows[0] == rows[1]


def test_compare_setting1_pattern(setting1):
    rows = {r.intervention: r for r in compare(setting1, [GI, DP, FC, LZ], S0, 2000, 100, 1e-10)}
    gi, dp, fc, lz = (rows[k] for k in ("group_independent", "demographic_parity", FC.label, "laissez_faire"))
    assert gi.eo_satisfied and not gi.dp_satisfied
    assert dp.dp_satisfied and not dp.eo_satisfied
    assert gi.terminal_s_bar == pytest.approx(o.S1_SBAR_PLUS, abs=1e-3)
    assert fc.terminal_disparity_l1 < 1e-6 < gi.terminal_disparity_l1
    assert lz.terminal_disparity_l1 < 1e-6
