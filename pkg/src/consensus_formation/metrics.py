"""RMSE metrics over a recorded trace and CSV/JSON serialization.

Trace CSV layout (one row per recorded step and agent)::

    step, t, agent, x0..x{n-1}, u0..u{m-1}, e0.., z0.., f0.., ref0.., V, drift_inner

``e`` is the consensus error, ``z = e + d`` the fixed-point residual, ``f``
the formation error ``d - e`` and ``ref`` the leader reference (repeated
on every agent row). ``V`` and ``drift_inner`` are network-level values,
also repeated. Floats are written with 17 significant digits so parsing
them back is exact.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from numpy.typing import NDArray

from .engine import SimTrace
from .errors import ConfigurationError
from .plant import YAW, ControlAffineModel, QuadrotorParams

Array = NDArray[np.float64]

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"
_GROUPS = ("x", "u", "e", "z", "f", "ref")


def _fmt(v: float) -> str:
    return FLOAT_FORMAT % v


def tracking_components(model: ControlAffineModel) -> dict[str, int]:
    """State indices compared against the reference: position and, for the quadrotor, yaw."""
    names = ("x", "y", "z")
    comps = {names[k] if k < 3 else f"p{k}": idx for k, idx in enumerate(model.position_index)}
    if isinstance(model.params, QuadrotorParams) and model.state_dim == 12:
        comps["psi"] = YAW
    return comps


def window_mask(times: Array, window: tuple[float, float] | None = None) -> Array:
    """Boolean mask of samples with ``start <= t <= end``; default is the last half of the run."""
    times = np.asarray(times, dtype=np.float64)
    if times.size == 0:
        raise ConfigurationError("trace has no samples")
    if window is None:
        window = (0.5 * float(times[-1]), float(times[-1]))
    start, end = window
    if start > end:
        raise ConfigurationError(f"window start {start} is after its end {end}")
    mask = (times >= start) & (times <= end)
    if not mask.any():
        raise ConfigurationError(f"window [{start}, {end}] contains no samples")
    return mask


def rmse(samples: Array) -> float:
    """Root mean square over every entry of ``samples``."""
    a = np.asarray(samples, dtype=np.float64)
    if a.size == 0:
        raise ConfigurationError("rmse of an empty series")
    return float(np.sqrt(np.mean(a * a)))


@dataclass
class TrackingRMSE:
    components: dict[str, float]
    aggregate: float

    def to_dict(self) -> dict:
        return {"aggregate": self.aggregate, **{f"e_{k}": v for k, v in self.components.items()}}


def tracking_rmse(trace: SimTrace, model: ControlAffineModel,
                  window: tuple[float, float] | None = None) -> TrackingRMSE:
    """Leader-minus-reference RMSE per component and over the stacked component vector.

    The aggregate is ``sqrt(mean_k |e_k|^2)`` with ``e_k`` the vector of all
    compared components at sample ``k``.
    """
    mask = window_mask(trace.times, window)
    comps = tracking_components(model)
    idx = list(comps.values())
    err = trace.states[mask, 0][:, idx] - trace.reference[mask][:, idx]
    if "psi" in comps:
        k = list(comps).index("psi")
        err[:, k] = (err[:, k] + np.pi) % (2 * np.pi) - np.pi
    per = {name: rmse(err[:, k]) for k, name in enumerate(comps)}
    agg = float(np.sqrt(np.mean(np.sum(err * err, axis=1))))
    return TrackingRMSE(per, agg)


def formation_rmse(trace: SimTrace, follower: int, window: tuple[float, float] | None = None) -> float:
    """RMSE of ``|x_j - x_i| - delta_ij`` over the window and the follower's formation edges."""
    cols = [k for k, e in enumerate(trace.edges) if follower in e]
    if not cols:
        raise ConfigurationError(f"agent {follower} has no formation edge")
    mask = window_mask(trace.times, window)
    return rmse(trace.edge_residuals[mask][:, cols])


def agent_label(index: int) -> str:
    return "leader" if index == 0 else f"follower_{index}"


@dataclass
class RunSummary:
    """Metric table and run metadata.

    ``duration`` is wall-clock seconds; it is written separately from the
    summary document so that repeated runs give byte-identical summaries.
    """

    leader_tracking: TrackingRMSE
    formation: dict[int, float]
    certificate: dict
    scenario: dict
    window: tuple[float, float]
    completed: bool = True
    failed_step: int | None = None
    failure: str | None = None
    max_lyapunov_increase: float | None = None
    reproduce: str = ""
    duration: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        rmse_table: dict[str, Any] = {"leader": self.leader_tracking.to_dict()}
        for i, v in sorted(self.formation.items()):
            rmse_table[agent_label(i)] = {"formation": v}
        return _jsonable({
            "schema_version": SCHEMA_VERSION,
            "rmse": rmse_table,
            "window": list(self.window),
            "certificate": self.certificate,
            "scenario": self.scenario,
            "completed": self.completed,
            "failed_step": self.failed_step,
            "failure": self.failure,
            "max_lyapunov_increase": self.max_lyapunov_increase,
            "reproduce": self.reproduce,
            **self.extra,
        })


def summarize(trace: SimTrace, model: ControlAffineModel, certificate: dict, scenario: dict,
              window: tuple[float, float] | None = None, reproduce: str = "") -> RunSummary:
    mask = window_mask(trace.times, window)
    win = (float(trace.times[mask][0]), float(trace.times[mask][-1]))
    followers = sorted({v for e in trace.edges for v in e if v != 0})
    return RunSummary(
        leader_tracking=tracking_rmse(trace, model, win),
        formation={i: formation_rmse(trace, i, win) for i in followers},
        certificate=certificate,
        scenario=scenario,
        window=win,
        completed=trace.completed,
        failed_step=trace.failed_step,
        failure=trace.failure,
        max_lyapunov_increase=trace.max_lyapunov_increase,
        reproduce=reproduce,
    )


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def export_summary(summary: RunSummary | dict, path: str | Path) -> Path:
    path = Path(path)
    doc = summary.to_dict() if isinstance(summary, RunSummary) else _jsonable(summary)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_summary(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def trace_header(n: int, m: int) -> list[str]:
    cols = ["step", "t", "agent"]
    sizes = {"x": n, "u": m, "e": n, "z": n, "f": n, "ref": n}
    for g in _GROUPS:
        cols += [f"{g}{k}" for k in range(sizes[g])]
    return cols + ["V", "drift_inner"]


def export_trace(trace: SimTrace, path: str | Path) -> Path:
    """Write the trace CSV; see the module docstring for the column layout."""
    path = Path(path)
    samples, agents, n = trace.states.shape
    m = trace.inputs.shape[2]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(n, m))
        for k in range(samples):
            ref = [_fmt(v) for v in trace.reference[k]]
            tail = [_fmt(trace.lyapunov[k]), _fmt(trace.drift_inner[k])]
            head = [str(int(trace.steps[k])), _fmt(trace.times[k])]
            for a in range(agents):
                row = head + [str(a)]
                for arr in (trace.states, trace.inputs, trace.errors, trace.residuals, trace.formation_errors):
                    row += [_fmt(v) for v in arr[k, a]]
                w.writerow(row + ref + tail)
    return path


def export_edge_residuals(trace: SimTrace, path: str | Path) -> Path:
    """CSV of per-edge distance residuals ``|x_j - x_i| - delta_ij``, one row per recorded step."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "t"] + [f"edge_{i}-{j}" for i, j in trace.edges])
        for k in range(trace.times.size):
            w.writerow([str(int(trace.steps[k])), _fmt(trace.times[k])]
                       + [_fmt(v) for v in trace.edge_residuals[k]])
    return path


def export_tracking_errors(trace: SimTrace, model: ControlAffineModel, path: str | Path) -> Path:
    """CSV of leader-minus-reference components over time."""
    path = Path(path)
    comps = tracking_components(model)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "t"] + [f"e_{c}" for c in comps])
        for k in range(trace.times.size):
            err = [trace.states[k, 0, i] - trace.reference[k, i] for i in comps.values()]
            w.writerow([str(int(trace.steps[k])), _fmt(trace.times[k])] + [_fmt(v) for v in err])
    return path


def _parse_edge(label: str) -> tuple[int, int]:
    i, j = label.removeprefix("edge_").split("-")
    return int(i), int(j)


def read_trace(path: str | Path, edge_path: str | Path | None = None) -> SimTrace:
    """Parse a trace CSV (and optionally its edge-residual CSV) back into a ``SimTrace``."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    n = sum(1 for c in header if c.startswith("x") and c[1:].isdigit())
    m = sum(1 for c in header if c.startswith("u") and c[1:].isdigit())
    if header != trace_header(n, m):
        raise ConfigurationError(f"{path}: unexpected trace header")
    agents = max(int(r[2]) for r in rows) + 1 if rows else 0
    if agents == 0 or len(rows) % agents:
        raise ConfigurationError(f"{path}: row count {len(rows)} is not a multiple of the agent count")
    samples = len(rows) // agents
    data = np.array([[float(v) for v in r[3:]] for r in rows]).reshape(samples, agents, -1)
    steps = np.array([int(rows[k * agents][0]) for k in range(samples)], dtype=np.int64)
    times = np.array([float(rows[k * agents][1]) for k in range(samples)])
    offs = np.cumsum([0, n, m, n, n, n, n])
    part = [data[:, :, offs[q]:offs[q + 1]] for q in range(6)]
    lyap = data[:, 0, offs[6]]
    drift = data[:, 0, offs[6] + 1]
    edges: tuple[tuple[int, int], ...] = ()
    resid = np.empty((samples, 0))
    if edge_path is not None:
        with Path(edge_path).open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            eh = next(reader)
            erows = list(reader)
        edges = tuple(_parse_edge(c) for c in eh[2:])
        resid = np.array([[float(v) for v in r[2:]] for r in erows]).reshape(samples, len(edges))
    dt = float(times[1] - times[0]) / max(1, int(steps[1] - steps[0])) if samples > 1 else float("nan")
    return SimTrace(steps, times, part[0], part[1], part[2], part[3], part[4], part[5][:, 0],
                    lyap, drift, resid, edges, dt)


def traces_equal(a: SimTrace, b: SimTrace, fields: Sequence[str] | None = None) -> bool:
    """Bit-exact comparison of the recorded arrays."""
    names = fields or ("steps", "times", "states", "inputs", "errors", "residuals",
                       "formation_errors", "reference", "lyapunov", "drift_inner")
    return all(np.array_equal(getattr(a, f), getattr(b, f)) for f in names)
