from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg

from consensus_formation import plant, topology
from consensus_formation.certificate import cascade_gain
from consensus_formation.config import load_config
from consensus_formation.control import ConsensusGain
from consensus_formation.engine import (Scenario, initial_states, run, run_integrator_oracle,
                                        run_or_raise)
from consensus_formation.errors import CertificateError, ConfigurationError, NumericError
from consensus_formation.factory import build_scenario
from consensus_formation.formation import triangular_formation
from consensus_formation.tracking import StationaryReference


def _integrator_scenario(seed=0, horizon=2.0, dt=1e-3, graph=None, leader_mode="pinned", **kw):
    g = graph or topology.build_line_graph(4)
    spec = triangular_formation(n=3)
    x0 = initial_states(spec, plant.single_integrator(3), np.zeros(3), np.random.default_rng(seed), 1.0)
    return Scenario(g, plant.single_integrator(3), spec, ConsensusGain(np.eye(3)), x0,
                    StationaryReference((0.0, 0.0, 0.0)), dt=dt, horizon=horizon,
                    leader_mode=leader_mode, **kw)


def _hover_scenario(horizon=1.0, **kw):
    model = plant.quadrotor_model()
    g = topology.build_line_graph(4)
    spec = triangular_formation(n=12)
    ref = StationaryReference((0.0, 0.0, 1.0))
    x0 = spec.goal_states + ref.state(0.0)
    gain = ConsensusGain(cascade_gain(model, topology.grounded_laplacian(g)))
    return Scenario(g, model, spec, gain, x0, ref, dt=1e-3, horizon=horizon, **kw)


def test_zero_horizon_records_initial_conditions_only():
    sc = _integrator_scenario(horizon=0.0)
    trace = run(sc)
    assert trace.times.tolist() == [0.0]
    assert np.array_equal(trace.states[0], sc.initial_states)


def test_time_stamps_uniform_and_stride():
    trace = run(_integrator_scenario(horizon=1.0, record_stride=7))
    assert trace.steps[0] == 0 and trace.steps[-1] == 1000
    assert np.all(np.diff(trace.steps[:-1]) == 7)
    assert np.allclose(trace.times, trace.steps * 1e-3)


def test_equilibrium_at_goals_is_held_for_one_second():
    sc = _hover_scenario(horizon=1.0, leader_mode="consensus")
    trace = run(sc)
    assert trace.completed
    assert np.max(np.abs(trace.inputs[:, 1:])) < 1e-9
    assert np.max(np.abs(trace.states - sc.initial_states)) < 1e-9


def test_equilibrium_persistence_ten_seconds():
    trace = run(_hover_scenario(horizon=10.0, record_stride=500))
    assert np.max(np.abs(trace.states - trace.states[0])) < 1e-6


def test_integrator_residual_matches_held_input_map():
    # inputs are held over each step, so for integrators z_{k+1} = (I - dt L_g) z_k exactly
    sc = _integrator_scenario(seed=3, horizon=3.0, record_stride=3000)
    trace = run(sc)
    gl = topology.grounded_laplacian(sc.graph)
    z0 = trace.residuals[0, 1:]
    discrete = np.linalg.matrix_power(np.eye(3) - 1e-3 * gl.matrix, 3000) @ z0
    assert np.allclose(trace.residuals[-1, 1:], discrete, atol=1e-12)
    continuous = scipy.linalg.expm(-3.0 * gl.matrix) @ z0
    assert np.allclose(trace.residuals[-1, 1:], continuous, atol=1e-4)


def test_integrator_lyapunov_decays_at_laplacian_rate():
    sc = _integrator_scenario(seed=5, horizon=5.0, record_stride=100)
    trace = run(sc)
    lam1 = topology.grounded_laplacian(sc.graph).eigenvalues()[0]
    assert trace.max_lyapunov_increase <= 0.0
    bound = trace.lyapunov[0] * np.exp(-2 * lam1 * trace.times)
    assert np.all(trace.lyapunov <= bound * (1 + 1e-9) + 1e-15)
    assert trace.lyapunov[-1] < 1e-2 * trace.lyapunov[0]


def test_pinned_leader_does_not_move():
    sc = _integrator_scenario(horizon=1.0)
    trace = run(sc)
    assert np.all(trace.states[:, 0] == sc.initial_states[0])
    assert np.all(trace.inputs[:, 0] == 0)


def test_refuted_gain_is_refused_unless_overridden():
    g = topology.build_line_graph(4)
    spec = triangular_formation(n=3)
    model = plant.linear_model(-np.eye(3))
    sc = Scenario(g, model, spec, ConsensusGain(np.eye(3)), spec.goal_states, StationaryReference((0, 0, 0)),
                  dt=1e-2, horizon=0.1, leader_mode="pinned")
    with pytest.raises(CertificateError):
        run(sc)
    assert run(sc, override_certificate=True).completed


def test_blowup_truncates_trace():
    g = topology.build_line_graph(4)
    spec = triangular_formation(n=3)
    model = plant.linear_model(1e3 * np.eye(3))
    x0 = spec.goal_states + 0.1
    sc = Scenario(g, model, spec, ConsensusGain(np.eye(3)), x0, StationaryReference((0, 0, 0)),
                  dt=1e-2, horizon=20.0, leader_mode="pinned")
    with np.errstate(over="ignore", invalid="ignore"):
        trace = run(sc)
        assert not trace.completed and trace.failed_step is not None
        assert trace.times[-1] < 20.0
        with pytest.raises(NumericError):
            run_or_raise(sc)


def test_runs_are_bit_deterministic():
    sc1 = build_scenario(load_config("crazyflie_triangle").with_overrides({("simulation", "horizon"): 0.3}))
    sc2 = build_scenario(load_config("crazyflie_triangle").with_overrides({("simulation", "horizon"): 0.3}))
    a, b = run(sc1.scenario), run(sc2.scenario)
    for name in ("states", "inputs", "residuals", "lyapunov", "edge_residuals"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_seed_changes_initial_states():
    cfg = load_config("crazyflie_triangle")
    a = build_scenario(cfg).scenario.initial_states
    b = build_scenario(cfg.with_overrides({("scenario", "seed"): 99})).scenario.initial_states
    assert not np.array_equal(a, b)
    assert np.array_equal(a[0], b[0])


def test_initial_states_box():
    spec = triangular_formation(n=12)
    model = plant.quadrotor_model()
    x = initial_states(spec, model, np.r_[1.0, 2.0, 3.0, np.zeros(9)], np.random.default_rng(0), 0.5)
    assert np.array_equal(x[0, :3], [1.0, 2.0, 3.0])
    dev = x[1:, :3] - (spec.goal_states[1:, :3] + [1.0, 2.0, 3.0])
    assert np.all(np.abs(dev) <= 0.5)
    assert np.all(x[:, 3:] == 0)


def test_scenario_validation():
    with pytest.raises(ConfigurationError):
        _integrator_scenario(horizon=1.0005, dt=1e-3)
    with pytest.raises(ConfigurationError):
        _integrator_scenario(dt=0.0)
    with pytest.raises(ConfigurationError):
        _integrator_scenario(leader_mode="orbit")


def test_oracle_fixed_point_and_translation():
    spec = triangular_formation(n=3)
    res = run_integrator_oracle(spec, spec.goal_states, horizon=1.0)
    assert res.spread == 0.0 and np.all(res.displacements == 0)
    c = np.array([1.0, -2.0, 0.5])
    shifted = run_integrator_oracle(spec, spec.goal_states + c, horizon=1.0, keep_history=True)
    assert np.max(np.abs(shifted.history - c)) <= 1e-12


def test_oracle_converges_on_line_edges():
    spec = triangular_formation(n=3)
    rng = np.random.default_rng(1)
    start = spec.goal_states + rng.uniform(-1, 1, size=(4, 3))
    res = run_integrator_oracle(spec, start, horizon=40.0, edges=[(0, 1), (1, 2), (2, 3)])
    assert res.spread < 1e-6
    # the mean displacement is conserved by the symmetric law
    assert np.allclose(res.displacements.mean(axis=0), (start - spec.goal_states).mean(axis=0), atol=1e-12)
    with pytest.raises(ConfigurationError):
        run_integrator_oracle(spec, start, horizon=1.0, edges=[(0, 1), (2, 3)])


@pytest.mark.slow
def test_step_size_robustness_on_quadrotor_scenario():
    cfg = load_config("crazyflie_triangle").with_overrides({("simulation", "record_stride"): 1000})
    coarse = run(build_scenario(cfg).scenario)
    fine_cfg = cfg.with_overrides({("simulation", "dt"): 5e-4, ("simulation", "record_stride"): 2000})
    fine = run(build_scenario(fine_cfg).scenario)
    assert coarse.completed and fine.completed
    diff = np.abs(coarse.final_states()[1:, :3] - fine.final_states()[1:, :3])
    assert diff.max() < 1e-4
