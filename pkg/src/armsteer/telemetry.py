"""Per-step telemetry records, CSV round-trip, and summary metrics.

The CSV layout is fixed: two leading comment lines (format tag and units),
then a header row whose names mirror the record fields, vector fields
expanded with numeric suffixes. Floats are written with repr so files
round-trip bit-exactly and identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

FORMAT_TAG = "armsteer telemetry v1"
UNITS_COMMENT = (
    "units: t [s]; q [rad]; r [m]; x,x_d,e [px]; d,u,u_T,u_N [rad/s]; "
    "z_hat,z_true [m]; V [mixed px^2]; null_residual [rad/s]; sigma_min [m/rad]; "
    "flags 0/1"
)

DEFAULT_CONVERGENCE_THRESHOLD_PX = 5.0
V_SLACK_FACTOR = 1e-4
STEADY_WINDOW_FRAC = 0.1


@dataclass(frozen=True)
class TelemetryRecord:
    """State, command, and diagnostics for one control step."""

    t: float
    q: np.ndarray
    r: np.ndarray
    x: np.ndarray
    x_d: np.ndarray
    e: np.ndarray
    d: np.ndarray
    u: np.ndarray
    u_T: np.ndarray
    u_N: np.ndarray
    z_hat: float
    z_true: float
    V: float
    null_residual: float
    sigma_min: float
    depth_clamped: bool
    jac_damped: bool
    img_damped: bool

    @property
    def error_norm(self) -> float:
        return float(np.linalg.norm(self.e))


class TelemetryLog:
    """Ordered collection of records for one run."""

    def __init__(self, records: Optional[list[TelemetryRecord]] = None):
        self.records: list[TelemetryRecord] = list(records) if records else []

    def append(self, rec: TelemetryRecord):
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def n_joints(self) -> int:
        return len(self.records[0].q) if self.records else 0

    def times(self) -> np.ndarray:
        return np.array([rec.t for rec in self.records])

    def error_norms(self) -> np.ndarray:
        return np.array([rec.error_norm for rec in self.records])

    def stack(self, name: str) -> np.ndarray:
        """(steps, dim) array of a vector field, or (steps,) for scalars."""
        return np.array([getattr(rec, name) for rec in self.records])

    def columns(self) -> list[str]:
        n = self.n_joints
        cols = ["t"]
        cols += [f"q{i}" for i in range(n)]
        cols += ["r0", "r1", "r2", "x0", "x1", "x_d0", "x_d1", "e0", "e1"]
        for prefix in ("d", "u", "u_T", "u_N"):
            cols += [f"{prefix}{i}" for i in range(n)]
        cols += [
            "z_hat", "z_true", "V", "null_residual", "sigma_min",
            "depth_clamped", "jac_damped", "img_damped",
        ]
        return cols

    def to_csv(self, path_or_buf) -> None:
        if isinstance(path_or_buf, (str,)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf, "w", newline="") as fh:
                self._write(fh)
        else:
            self._write(path_or_buf)

    def _write(self, fh) -> None:
        fh.write(f"# {FORMAT_TAG}\n")
        fh.write(f"# {UNITS_COMMENT}\n")
        writer = csv.writer(fh)
        writer.writerow(self.columns())
        for rec in self.records:
            row = [repr(float(rec.t))]
            for vec in (rec.q, rec.r, rec.x, rec.x_d, rec.e, rec.d,
                        rec.u, rec.u_T, rec.u_N):
                row += [repr(float(v)) for v in vec]
            row += [repr(float(v)) for v in (rec.z_hat, rec.z_true, rec.V,
                                             rec.null_residual, rec.sigma_min)]
            row += [str(int(rec.depth_clamped)), str(int(rec.jac_damped)),
                    str(int(rec.img_damped))]
            writer.writerow(row)

    def to_csv_bytes(self) -> bytes:
        buf = io.StringIO()
        self._write(buf)
        return buf.getvalue().encode()

    @classmethod
    def from_csv(cls, path) -> "TelemetryLog":
        with open(path, newline="") as fh:
            lines = [ln for ln in fh if not ln.startswith("#")]
        reader = csv.reader(lines)
        header = next(reader)
        n = sum(1 for c in header if c.startswith("q") and c[1:].isdigit())
        idx = {name: i for i, name in enumerate(header)}

        def vec(row, prefix, dim):
            return np.array([float(row[idx[f"{prefix}{i}"]]) for i in range(dim)])

        records = []
        for row in reader:
            records.append(TelemetryRecord(
                t=float(row[idx["t"]]),
                q=vec(row, "q", n),
                r=vec(row, "r", 3),
                x=vec(row, "x", 2),
                x_d=vec(row, "x_d", 2),
                e=vec(row, "e", 2),
                d=vec(row, "d", n),
                u=vec(row, "u", n),
                u_T=vec(row, "u_T", n),
                u_N=vec(row, "u_N", n),
                z_hat=float(row[idx["z_hat"]]),
                z_true=float(row[idx["z_true"]]),
                V=float(row[idx["V"]]),
                null_residual=float(row[idx["null_residual"]]),
                sigma_min=float(row[idx["sigma_min"]]),
                depth_clamped=bool(int(row[idx["depth_clamped"]])),
                jac_damped=bool(int(row[idx["jac_damped"]])),
                img_damped=bool(int(row[idx["img_damped"]])),
            ))
        return cls(records)


@dataclass
class SummaryMetrics:
    """Headline numbers for one run, JSON-serializable via dataclasses.asdict."""

    steps: int
    dt: float
    duration_s: float
    convergence_threshold_px: float
    convergence_time_s: Optional[float]
    initial_error_px: float
    final_error_px: float
    steady_state_mean_px: float
    steady_state_max_px: float
    max_null_residual: float
    max_null_residual_undamped: float
    v_initial: float
    v_final: float
    v_total_decrease: float
    v_violations: int
    v_max_increase: float
    v_slack: float
    depth_clamp_steps: int
    jac_damped_steps: int
    img_damped_steps: int

    def table_rows(self) -> list[tuple[str, str]]:
        conv = "never" if self.convergence_time_s is None else f"{self.convergence_time_s:.3f} s"
        return [
            ("steps", str(self.steps)),
            ("duration", f"{self.duration_s:.3f} s"),
            (f"convergence time (<{self.convergence_threshold_px:g} px)", conv),
            ("initial |e|", f"{self.initial_error_px:.3f} px"),
            ("final |e|", f"{self.final_error_px:.4g} px"),
            ("steady-state mean |e|", f"{self.steady_state_mean_px:.4g} px"),
            ("steady-state max |e|", f"{self.steady_state_max_px:.4g} px"),
            ("max null residual (undamped)", f"{self.max_null_residual_undamped:.3e}"),
            ("V decrease", f"{self.v_total_decrease:.6g}"),
            ("V violations (slack {:.1e})".format(self.v_slack), str(self.v_violations)),
            ("depth clamp steps", str(self.depth_clamp_steps)),
            ("damped steps (arm/image)", f"{self.jac_damped_steps}/{self.img_damped_steps}"),
        ]


def convergence_time(
    times: np.ndarray, error_norms: np.ndarray, threshold: float
) -> Optional[float]:
    """First time from which the error norm stays below threshold, else None."""
    below = error_norms < threshold
    if not below[-1]:
        return None
    above = np.nonzero(~below)[0]
    if len(above) == 0:
        return float(times[0])
    return float(times[above[-1] + 1])


def summarize(
    log: TelemetryLog | Iterable[TelemetryRecord],
    threshold_px: float = DEFAULT_CONVERGENCE_THRESHOLD_PX,
) -> SummaryMetrics:
    """Compute the standard metrics table from a telemetry log."""
    records = list(log)
    if not records:
        raise ValueError("empty telemetry log")
    times = np.array([rec.t for rec in records])
    errors = np.array([float(np.linalg.norm(rec.e)) for rec in records])
    v_vals = np.array([rec.V for rec in records])
    residuals = np.array([rec.null_residual for rec in records])
    undamped = np.array([not (rec.jac_damped or rec.img_damped) for rec in records])

    tail = max(1, int(math.ceil(len(records) * STEADY_WINDOW_FRAC)))
    dv = np.diff(v_vals) if len(v_vals) > 1 else np.zeros(0)
    slack = V_SLACK_FACTOR * max(v_vals[0], np.finfo(float).tiny)
    dt = float(times[1] - times[0]) if len(times) > 1 else 0.0

    return SummaryMetrics(
        steps=len(records),
        dt=dt,
        duration_s=float(times[-1] - times[0]),
        convergence_threshold_px=threshold_px,
        convergence_time_s=convergence_time(times, errors, threshold_px),
        initial_error_px=float(errors[0]),
        final_error_px=float(errors[-1]),
        steady_state_mean_px=float(errors[-tail:].mean()),
        steady_state_max_px=float(errors[-tail:].max()),
        max_null_residual=float(residuals.max()),
        max_null_residual_undamped=float(residuals[undamped].max()) if undamped.any() else 0.0,
        v_initial=float(v_vals[0]),
        v_final=float(v_vals[-1]),
        v_total_decrease=float(v_vals[0] - v_vals[-1]),
        v_violations=int((dv > slack).sum()),
        v_max_increase=float(dv.max()) if len(dv) else 0.0,
        v_slack=float(slack),
        depth_clamp_steps=sum(rec.depth_clamped for rec in records),
        jac_damped_steps=sum(rec.jac_damped for rec in records),
        img_damped_steps=sum(rec.img_damped for rec in records),
    )
