"""Consensus-based leader-follower formation tracking for control-affine multiagent systems."""

from __future__ import annotations

from .certificate import (CascadeGains, CertificateReport, assemble_lmi, cascade_gain, certify,
                          diagonal_candidate_search, extract_P, gain_from_feedback, pairwise_check,
                          riccati_gain, sampled_assumption5_check)
from .control import (ConsensusGain, consensus_error, ensemble_control, follower_control,
                      formation_error, leader_control, lyapunov_value)
from .engine import Scenario, SimTrace, initial_states, run, run_integrator_oracle, run_or_raise
from .errors import (CertificateError, ConfigurationError, ConnectivityError, DimensionError,
                     FormationError, GeometryError, NumericError, SingularityError, SymmetryError,
                     TopologyError)
from .formation import (FormationSpec, aggregate_offset, aggregate_offsets, assemble_D,
                        assemble_delta_f, explicit_formation, triangular_formation)
from .metrics import (RunSummary, export_summary, export_trace, formation_rmse, read_summary,
                      read_trace, tracking_rmse)
from .plant import (ControlAffineModel, QuadrotorParams, linear_model, quadrotor_model,
                    rigid_body_rotation, single_integrator, step_rk4)
from .topology import (GroundedLaplacian, LeaderFollowerGraph, adjacency, build_line_graph,
                       build_star_graph, grounded_laplacian, inverse_m, laplacian, leader_injection,
                       parse_graph)
from .tracking import FigureEight, StationaryReference, TrackingGains, figure_eight_reference, leader_tracking_control

__version__ = "0.1.0"
