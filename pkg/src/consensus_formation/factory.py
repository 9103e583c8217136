"""Turn a resolved ``ScenarioConfig`` into library objects."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .certificate import (CascadeGains, cascade_gain, diagonal_candidate_search, riccati_gain)
from .config import ScenarioConfig
from .control import ConsensusGain
from .engine import Scenario, initial_states
from .errors import CertificateError, ConfigurationError
from .formation import FormationSpec, explicit_formation, triangular_formation
from .plant import ControlAffineModel, QuadrotorParams, linear_model, quadrotor_model, single_integrator
from .topology import LeaderFollowerGraph, grounded_laplacian, parse_graph
from .tracking import FigureEight, StationaryReference, TrackingGains

Array = NDArray[np.float64]


def parse_edge_list(text: str) -> list[tuple[int, int]]:
    """``"0-1, 1-2"`` -> ``[(0, 1), (1, 2)]``."""
    edges = []
    for token in text.replace(";", ",").split(","):
        token = token.strip()
        if not token:
            continue
        try:
            a, b = token.split("-")
            edges.append((int(a), int(b)))
        except ValueError:
            raise ConfigurationError(f"bad edge {token!r}; expected i-j") from None
    if not edges:
        raise ConfigurationError("edge list is empty")
    return edges


def build_graph(cfg: ScenarioConfig) -> LeaderFollowerGraph:
    if cfg.get("graph", "leader") != 0:
        raise ConfigurationError("graph.leader must be 0")
    topo = cfg.get("graph", "topology")
    if ":" in topo:
        return parse_graph(topo)
    return parse_graph(edges=parse_edge_list(topo))


def build_model(cfg: ScenarioConfig) -> ControlAffineModel:
    kind = cfg.get("plant", "model")
    if kind == "quadrotor":
        keys = ("mass", "arm_length", "inertia_xx", "inertia_yy", "inertia_zz", "gravity")
        return quadrotor_model(QuadrotorParams(**{k: cfg.get("plant", k) for k in keys}))
    if kind == "single_integrator":
        return single_integrator(cfg.get("plant", "dim"))
    a = cfg.get("plant", "a")
    if a is None:
        raise ConfigurationError("plant.a is required for the linear model")
    return linear_model(np.array(a))


def build_formation(cfg: ScenarioConfig, graph: LeaderFollowerGraph, n: int) -> FormationSpec:
    if cfg.get("formation", "shape") == "triangular":
        spec = triangular_formation(cfg.get("formation", "delta_l1"), cfg.get("formation", "delta_12"),
                                    cfg.get("formation", "delta_13"), n,
                                    np.deg2rad(cfg.get("formation", "spread_angle_deg")))
    else:
        goals = cfg.get("formation", "goals")
        if goals is None:
            raise ConfigurationError("formation.goals is required for an explicit formation")
        edges = cfg.get("formation", "edges")
        spec = explicit_formation(np.array(goals), parse_edge_list(edges) if edges else None, graph)
    if spec.agent_count != graph.vertex_count:
        raise ConfigurationError(f"formation has {spec.agent_count} agents, graph has {graph.vertex_count}")
    if spec.state_dim != n:
        raise ConfigurationError(f"formation goals have dimension {spec.state_dim}, plant has n={n}")
    return spec


def certificate_domain(cfg: ScenarioConfig, spec: FormationSpec) -> tuple[Array, Array] | None:
    """Box around the goal states for the sampled drift check, if configured."""
    box = cfg.get("certificate", "sample_box")
    if box is None:
        return None
    goals = spec.goal_states
    return goals.min(axis=0) - box, goals.max(axis=0) + box


def build_gain(cfg: ScenarioConfig, graph: LeaderFollowerGraph, spec: FormationSpec,
               model: ControlAffineModel) -> ConsensusGain:
    kind = cfg.get("gain", "kind")
    n = model.state_dim
    if kind == "identity":
        p = np.eye(n)
    elif kind == "diagonal":
        diag = cfg.get("gain", "diagonal")
        if diag is None or len(diag) != n:
            raise ConfigurationError(f"gain.diagonal needs {n} values")
        p = np.diag(diag)
    elif kind == "matrix":
        mat = cfg.get("gain", "matrix")
        if mat is None:
            raise ConfigurationError("gain.matrix is required for kind = matrix")
        p = np.array(mat)
    elif kind == "search":
        found = diagonal_candidate_search(spec, model, cfg.get("gain", "search_grid"),
                                          domain=certificate_domain(cfg, spec),
                                          seed=cfg.get("certificate", "sample_seed"))
        if found is None:
            raise CertificateError("no diagonal candidate passed the certificate")
        p = found
    elif kind == "cascade":
        keys = ("kp_position", "kd_position", "kp_altitude", "kd_altitude",
                "kp_attitude", "kd_attitude", "kp_yaw", "kd_yaw")
        gains = CascadeGains(**{k: cfg.get("gain", k) for k in keys})
        p = cascade_gain(model, grounded_laplacian(graph), gains, cfg.get("gain", "margin"))
    else:
        p = riccati_gain(model, grounded_laplacian(graph), cfg.get("gain", "riccati_weights"),
                         cfg.get("gain", "riccati_scale"))
    return ConsensusGain(p)


def build_reference(cfg: ScenarioConfig):
    if cfg.get("reference", "kind") == "figure_eight":
        return FigureEight(cfg.get("reference", "amplitude"), cfg.get("reference", "period"),
                           cfg.get("reference", "altitude"))
    return StationaryReference(tuple(cfg.get("reference", "point")))


def build_tracking_gains(cfg: ScenarioConfig) -> TrackingGains:
    keys = ("kp_position", "kd_position", "kp_attitude", "kd_attitude", "kp_yaw", "kd_yaw", "max_tilt", "k")
    return TrackingGains(**{k: cfg.get("leader", k) for k in keys})


@dataclass
class BuiltScenario:
    scenario: Scenario
    config: ScenarioConfig
    domain: tuple[Array, Array] | None

    @property
    def override_certificate(self) -> bool:
        return bool(self.config.get("simulation", "override_certificate"))

    @property
    def window(self) -> tuple[float, float] | None:
        start = self.config.get("output", "window_start")
        end = self.config.get("output", "window_end")
        if start is None and end is None:
            return None
        horizon = self.scenario.horizon
        return (0.5 * horizon if start is None else start, horizon if end is None else end)


def build_scenario(cfg: ScenarioConfig) -> BuiltScenario:
    graph = build_graph(cfg)
    model = build_model(cfg)
    spec = build_formation(cfg, graph, model.state_dim)
    gain = build_gain(cfg, graph, spec, model)
    reference = build_reference(cfg)
    seed = cfg.get("scenario", "seed")
    rng = np.random.default_rng(seed)
    x0 = initial_states(spec, model, reference.state(0.0, model.state_dim), rng,
                        cfg.get("simulation", "init_box"))
    scenario = Scenario(graph, model, spec, gain, x0, reference,
                        dt=cfg.get("simulation", "dt"), horizon=cfg.get("simulation", "horizon"),
                        seed=seed, leader_mode=cfg.get("leader", "mode"),
                        tracking_gains=build_tracking_gains(cfg),
                        record_stride=cfg.get("simulation", "record_stride"),
                        name=cfg.get("scenario", "name"))
    return BuiltScenario(scenario, cfg, certificate_domain(cfg, spec))
