"""Inverter and SMIB model checks."""

import numpy as np
import pytest
from scipy.linalg import expm

from hdsim import (
    ArgumentError,
    InverterParams,
    InverterScenario,
    PiecewiseLinearProfile,
    SmibParams,
    blended_flow,
    current_clamp,
    generate_truth_and_measurements,
    gfl_flow,
    gfm_flow,
    gfm_system_matrices,
    integrate_flow,
    inverter_automaton,
    mode_sigmoid,
    reference_noise,
    reference_profile,
    reference_scenario,
    simulate,
    smib_state,
    smib_system,
    swing_field,
)
from hdsim.estimation import NoiseModel
from hdsim.power import GFL

P = InverterParams()


# -- GFL flow ----------------------------------------------------------------


def test_gfl_current_equilibrium():
    # with v_d = R and v_q = omega L, unit d-current is an equilibrium of
    # both current equations
    x = np.array([1.0, 0.0, 1.89, 0.0189])
    dx = gfl_flow(x, v_grid=1.89, p=P)
    assert abs(dx[0]) < 1e-12 and abs(dx[1]) < 1e-12


def test_gfl_origin_equilibrium():
    dx = gfl_flow(np.zeros(4), v_grid=0.0, p=P)
    assert np.all(dx == 0.0)


def test_gfl_voltage_tracking_rate():
    dx = gfl_flow(np.zeros(4), v_grid=1.0, p=P)
    assert abs(dx[2] - 1.0 / P.tau_v) < 1e-12


# -- GFM flow ----------------------------------------------------------------


def test_gfm_zero_current_means_static_voltages():
    dx = gfm_flow(np.array([0.0, 0.0, 0.7, -0.3]), p=P)
    assert dx[2] == 0.0 and dx[3] == 0.0


def test_gfm_reference_reached_means_zero_algebraic_currents():
    dx = gfm_flow(np.array([0.0, 0.0, 1.0, 0.0]), p=P)
    assert np.all(dx == 0.0)


def test_gfm_algebraic_q_current():
    # i_q_alg = -v_q / R = 1 when v_q = -1.89; tracking rate (1 - i_q)/tau_i
    dx = gfm_flow(np.array([0.0, 0.0, 1.0, -1.89]), p=P)
    assert abs(dx[1] - 1.0 / P.tau_i) < 1e-12


def test_gfm_affine_form_is_exact():
    a, b = gfm_system_matrices(P)
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = rng.standard_normal(4)
        assert np.max(np.abs(gfm_flow(x, P) - (a @ x + b))) < 1e-12


def test_gfm_trajectory_matches_matrix_exponential():
    a, b = gfm_system_matrices(P)
    aug = np.zeros((5, 5))
    aug[:4, :4] = a
    aug[:4, 4] = b
    x0 = np.array([0.0, 0.0, 1.0, 0.0])
    samples = integrate_flow(lambda x, t: gfm_flow(x, P), x0, 0.0, 0.2, 1e-4)
    worst = 0.0
    for t, x in samples[::100]:
        exact = (expm(aug * t) @ np.concatenate([x0, [1.0]]))[:4]
        worst = max(worst, float(np.max(np.abs(x - exact))))
    assert worst < 1e-8


# -- sigmoid blend ------------------------------------------------------------


def test_blend_midpoint_is_exact_mean():
    x = np.array([0.4, -0.1, 0.9, 0.05])
    v = P.sigmoid_mid
    assert mode_sigmoid(v, P) == 0.5
    blend = blended_flow(x, v, P)
    mean = 0.5 * gfl_flow(x, v, P) + 0.5 * gfm_flow(x, P)
    assert np.max(np.abs(blend - mean)) < 1e-15


def test_blend_far_above_threshold_is_nearly_gfl():
    x = np.array([0.4, -0.1, 0.9, 0.05])
    v = P.sigmoid_mid + 0.2
    assert abs(mode_sigmoid(v, P) - 0.9999546021312976) < 1e-12  # expit(10)
    f_gfl = gfl_flow(x, v, P)
    f_gfm = gfm_flow(x, P)
    gap = np.linalg.norm(f_gfm - f_gfl)
    assert np.linalg.norm(blended_flow(x, v, P) - f_gfl) <= 1e-4 * gap


def test_blend_of_identical_fields_is_that_field():
    # both fields are affine in x; solve for the state where they agree
    from hdsim import numerical_jacobian

    v = 0.9
    a_gfl = numerical_jacobian(lambda x: gfl_flow(x, v, P), np.zeros(4))
    a_gfm = numerical_jacobian(lambda x: gfm_flow(x, P), np.zeros(4))
    b_gfl = gfl_flow(np.zeros(4), v, P)
    b_gfm = gfm_flow(np.zeros(4), P)
    x_star = np.linalg.solve(a_gfl - a_gfm, b_gfm - b_gfl)
    f_gfl = gfl_flow(x_star, v, P)
    assert np.max(np.abs(f_gfl - gfm_flow(x_star, P))) < 1e-6
    blend = blended_flow(x_star, v, P)
    assert np.max(np.abs(blend - f_gfl)) < 1e-6


def test_blend_converges_to_mode_fields_for_sharp_gain():
    sharp = InverterParams(sigmoid_gain=5000.0)
    x = np.array([0.4, -0.1, 0.9, 0.05])
    for dv, target in ((0.05, "gfl"), (-0.05, "gfm")):
        v = sharp.sigmoid_mid + dv
        f_gfl = gfl_flow(x, v, sharp)
        f_gfm = gfm_flow(x, sharp)
        blend = blended_flow(x, v, sharp)
        ref = f_gfl if target == "gfl" else f_gfm
        scale = max(np.linalg.norm(ref), np.linalg.norm(f_gfm - f_gfl))
        assert np.linalg.norm(blend - ref) <= 1e-6 * scale


# -- clamp reset ---------------------------------------------------------------


def test_clamp_definition_and_idempotence():
    x = np.array([2.0, -1.5, 0.8, 0.1])
    once = current_clamp(x, P)
    assert once[0] == P.i_lim and once[1] == -P.i_lim
    assert once[2] == 0.8 and once[3] == 0.1
    assert np.array_equal(current_clamp(once, P), once)


# -- inverter automaton --------------------------------------------------------


def test_constant_nominal_voltage_never_leaves_gfl():
    profile = PiecewiseLinearProfile(times=(0.0, 0.2), values=(1.0, 1.0))
    automaton = inverter_automaton(P, profile)
    traj = simulate(automaton, np.array([0.0, 0.0, 1.0, 0.0]), 0.2, 10, 1e-4,
                    mode0=GFL)
    assert len(traj.jumps) == 0
    assert set(traj.modes) == {GFL}


def test_reference_scenario_has_two_jumps_at_analytic_crossings():
    sc = reference_scenario()
    automaton = inverter_automaton(sc.params, sc.v_grid)
    traj = simulate(automaton, sc.x0, sc.horizon, 10, sc.dt, mode0=GFL)
    assert [r.edge for r in traj.jumps] == ["GFL->GFM", "GFM->GFL"]
    # ramp 1.0->0.5 over [0.05, 0.06] crosses 0.8 at 0.054;
    # ramp 0.5->1.0 over [0.12, 0.13] crosses 0.9 at 0.128
    assert abs(traj.jump_times[0] - 0.054) <= 1e-9
    assert abs(traj.jump_times[1] - 0.128) <= 1e-9


def test_reset_clamps_currents_only():
    params = InverterParams(i_lim=1.2)
    profile = reference_profile()
    automaton = inverter_automaton(params, profile)
    edge = automaton.outgoing(GFL)[0]
    post = edge.reset(np.array([2.0, 0.1, 0.77, -0.02]))
    assert post[0] == 1.2
    assert post[1] == 0.1
    assert post[2] == 0.77 and post[3] == -0.02


def test_hysteresis_alternates_edges_on_random_profiles():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n_pts = int(rng.integers(3, 8))
        times = np.sort(rng.random(n_pts)) * 0.18
        times = np.concatenate([[0.0], times, [0.2]])
        values = rng.random(times.size) * 0.8 + 0.4  # 0.4 .. 1.2 pu
        values[0] = 1.0
        profile = PiecewiseLinearProfile(tuple(times), tuple(values))
        automaton = inverter_automaton(P, profile)
        traj = simulate(automaton, np.array([0.0, 0.0, 1.0, 0.0]),
                        0.2, 20, 2e-4, mode0=GFL)
        edges = [r.edge for r in traj.jumps]
        for first, second in zip(edges, edges[1:]):
            assert first != second  # strict alternation under hysteresis
        for r in traj.jumps:
            v_at_jump = profile(r.t)
            if r.edge == "GFL->GFM":
                assert abs(v_at_jump - P.v_low) <= 1e-6
            else:
                assert abs(v_at_jump - P.v_high) <= 1e-6


def test_no_jump_inside_hysteresis_band():
    # profile dips into the band (0.85) without crossing v_low: no jumps
    profile = PiecewiseLinearProfile(
        times=(0.0, 0.05, 0.1, 0.2), values=(1.0, 0.85, 1.0, 1.0)
    )
    automaton = inverter_automaton(P, profile)
    traj = simulate(automaton, np.array([0.0, 0.0, 1.0, 0.0]), 0.2, 10, 1e-4,
                    mode0=GFL)
    assert len(traj.jumps) == 0


# -- scenarios, truth, measurements -------------------------------------------


def test_scenario_validation():
    with pytest.raises(ArgumentError):
        InverterScenario(
            horizon=0.2, dt=3e-4, v_grid=reference_profile(), seed=1,
            x0=np.zeros(4), params=P, noise=reference_noise(),
        )
    with pytest.raises(ArgumentError):
        InverterScenario(
            horizon=0.5, dt=1e-4, v_grid=reference_profile(), seed=1,
            x0=np.zeros(4), params=P, noise=reference_noise(),
        )


def test_noiseless_measurements_equal_truth():
    noise = NoiseModel(q=1e-6 * np.eye(4), r=np.zeros((4, 4)), h=np.eye(4))
    sc = reference_scenario(noise=noise)
    truth, z = generate_truth_and_measurements(sc)
    grid = truth.grid_states(0.0, sc.dt, sc.n_steps)
    assert np.array_equal(z, grid)


def test_measurement_stream_is_seed_deterministic():
    sc_a = reference_scenario(seed=42)
    sc_b = reference_scenario(seed=42)
    _, za = generate_truth_and_measurements(sc_a)
    _, zb = generate_truth_and_measurements(sc_b)
    assert np.array_equal(za, zb)
    _, zc = generate_truth_and_measurements(reference_scenario(seed=43))
    assert not np.array_equal(za, zc)


def test_empirical_noise_standard_deviations():
    sc = reference_scenario(seed=7)
    truth, z = generate_truth_and_measurements(sc)
    grid = truth.grid_states(0.0, sc.dt, sc.n_steps)
    resid = z - grid
    # voltage channels carry the 0.004 noise, current channels the 0.01
    sd = resid.std(axis=0, ddof=1)
    assert abs(sd[2] - 0.004) <= 0.15 * 0.004
    assert abs(sd[3] - 0.004) <= 0.15 * 0.004
    assert abs(sd[0] - 0.01) <= 0.15 * 0.01
    assert abs(sd[1] - 0.01) <= 0.15 * 0.01


# -- SMIB ----------------------------------------------------------------------


def test_balanced_torque_equilibrium():
    params = SmibParams(p_e=lambda d: 1.0, p_m=1.0, i_max=1.4)
    system = smib_system(params)
    traj = simulate(system, smib_state(0.5, 0.0), 0.5, 5, 1e-3)
    assert len(traj.jumps) == 0
    states = traj.states
    assert np.max(np.abs(states[:, 0] - 0.5)) < 1e-12
    assert np.max(np.abs(states[:, 1])) < 1e-12


def test_identical_line_switch_matches_unswitched():
    # start below the equilibrium angle so the swing overshoots and the
    # line-1 current crosses the (lowered) protection threshold mid-flight
    params = SmibParams(i_max=1.1, p_min=0.1, p_max=0.2)
    system = smib_system(params)
    x0 = smib_state(0.5, 0.0, line=1)
    traj = simulate(system, x0, 1.0, 5, 1e-4)
    # the restoration band [0.1, 0.2] is never revisited: exactly one switch
    assert len(traj.jumps) == 1
    assert traj.jumps[0].t > 0.0
    assert traj.samples[-1].time.j == 1
    oracle = integrate_flow(swing_field(params), np.array([0.5, 0.0]), 0.0, 1.0, 1e-4)
    grid = traj.grid_states(0.0, 1e-4, 10000)
    diff = np.max(np.abs(grid[:, :2] - np.array([x for _, x in oracle])))
    assert diff <= 1e-9


def test_zero_threshold_trips_immediately():
    params = SmibParams(i_max=0.0)
    system = smib_system(params)
    traj = simulate(system, smib_state(0.5, 0.0), 0.1, 3, 1e-3)
    assert traj.jumps[0].t == 0.0
    assert traj.jumps[0].edge == "jump"
    assert traj.samples[1].mode == "line2"


def test_line_restoration_band():
    # after tripping, line 1 returns once P_e re-enters [p_min, p_max]
    params = SmibParams(i_max=1.1, p_min=0.5, p_max=0.9)
    system = smib_system(params)
    traj = simulate(system, smib_state(0.5, 0.0), 2.0, 10, 1e-4)
    modes = [r.mode_after for r in traj.jumps]
    if len(traj.jumps) >= 2:
        assert modes[0] == "line2" and modes[1] == "line1"
        pe_at_restore = params.p_e(traj.jumps[1].state_before[0])
        assert params.p_min - 1e-6 <= pe_at_restore <= params.p_max + 1e-6
