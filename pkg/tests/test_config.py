from __future__ import annotations

import pytest

from consensus_formation.config import bundled_scenarios, defaults, load_config, parse_config
from consensus_formation.errors import ConfigurationError
from consensus_formation.factory import build_scenario, parse_edge_list


def test_bundled_scenarios_parse_and_build():
    names = bundled_scenarios()
    assert {"crazyflie_triangle", "integrator_line", "stationary_leader", "refuted_gain"} <= set(names)
    for name in names:
        built = build_scenario(load_config(name))
        assert built.scenario.initial_states.shape[0] == 4


def test_values_are_typed():
    cfg = parse_config("[simulation]\ndt = 0.005  # comment\nhorizon = 2\n[gain]\ndiagonal = 1, 2 3\n")
    assert cfg.get("simulation", "dt") == 0.005
    assert isinstance(cfg.get("simulation", "horizon"), float)
    assert cfg.get("gain", "diagonal") == (1.0, 2.0, 3.0)
    assert cfg.get("scenario", "seed") == defaults().get("scenario", "seed")


def test_unknown_key_reports_line():
    text = "[scenario]\nseed = 1\n\n[simulation]\ndt = 0.01\nstep = 3\n"
    with pytest.raises(ConfigurationError, match=r":6: unknown key 'step'"):
        parse_config(text, source="x.cfg")


def test_unknown_section_reports_line():
    with pytest.raises(ConfigurationError, match=r"x.cfg:3: unknown section \[solver\]"):
        parse_config("[scenario]\nseed = 1\n[solver]\nkind = rk4\n", source="x.cfg")


def test_bad_value_reports_line():
    with pytest.raises(ConfigurationError, match=r":2: bad value for simulation.dt"):
        parse_config("[simulation]\ndt = fast\n", source="x.cfg")
    with pytest.raises(ConfigurationError, match="expected one of"):
        parse_config("[gain]\nkind = magic\n")


def test_malformed_file_is_configuration_error():
    with pytest.raises(ConfigurationError):
        parse_config("seed = 1\n")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        load_config(tmp_path / "nope.cfg")


def test_overrides_ignore_none_and_reject_unknown():
    cfg = parse_config("[scenario]\nseed = 5\n")
    new = cfg.with_overrides({("scenario", "seed"): 9, ("simulation", "dt"): None})
    assert new.get("scenario", "seed") == 9 and cfg.get("scenario", "seed") == 5
    assert new.get("simulation", "dt") == cfg.get("simulation", "dt")
    with pytest.raises(ConfigurationError):
        cfg.with_overrides({("simulation", "solver"): "euler"})


def test_file_round_trip(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text("[graph]\ntopology = 0-1, 0-2, 0-3\n")
    cfg = load_config(p)
    assert parse_edge_list(cfg.get("graph", "topology")) == [(0, 1), (0, 2), (0, 3)]
    assert cfg.echo()["graph"]["topology"] == "0-1, 0-2, 0-3"


def test_edge_list_rejects_garbage():
    with pytest.raises(ConfigurationError):
        parse_edge_list("0-1, a-b")
