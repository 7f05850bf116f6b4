"""Frequency-response metrics over simulated or measured traces.

Conventions follow NERC BAL-003-1 practice: Value A is the 16 s pre-event
mean, Value B the [20 s, 52 s] post-event mean, settling frequency equals
Value B, and the interconnection frequency response is the lost MW per
0.1 Hz of A minus B.  ROCOF is reported as the maximum-magnitude
least-squares slope of any fixed-width window in the first ten seconds
after the event (the windowing convention is a parameter; published event
reports rarely state theirs).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import yaml

__all__ = [
    "FrequencyTrace",
    "MetricsReport",
    "MismatchReport",
    "ComplianceResult",
    "nadir",
    "rocof",
    "settling_and_values",
    "nerc_frequency_response",
    "mismatch_report",
    "compliance_check",
    "read_trace",
    "read_report",
    "format_validation_table",
]

VALUE_A_SPAN_S = 16.0
VALUE_B_WINDOW_S = (20.0, 52.0)


@dataclass(frozen=True)
class FrequencyTrace:
    """Uniformly sampled frequency series with its event time."""

    t: np.ndarray
    f_hz: np.ndarray
    t0: float
    source: str = "simulated"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        f = np.asarray(self.f_hz, dtype=float)
        if t.ndim != 1 or t.shape != f.shape or t.size < 2:
            raise ValueError("trace needs matching 1-d time and frequency arrays, >= 2 samples")
        steps = np.diff(t)
        if steps.min() <= 0 or (steps.max() - steps.min()) > 1e-6 * steps.mean():
            raise ValueError("trace time grid must be uniform and increasing")
        if not (t[0] - 1e-9 <= self.t0 <= t[-1] + 1e-9):
            raise ValueError("event time t0 must lie inside the time grid")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "f_hz", f)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @classmethod
    def from_simulation(cls, result, area: str | None = None, t0: float | None = None) -> "FrequencyTrace":
        """Trace from a SimulationResult: one area, or the inertia-weighted system frequency."""
        f = result.system_frequency() if area is None else result.f_hz[:, result.area_index(area)]
        if t0 is None:
            t0 = result.contingency.t_event_s if result.contingency.area else float(result.t[0])
        return cls(t=result.t.copy(), f_hz=np.asarray(f, dtype=float).copy(), t0=t0)


class NadirResult(NamedTuple):
    f_min_hz: float
    t_min_s: float


class SettlingResult(NamedTuple):
    value_a_hz: float
    value_b_hz: float
    settling_hz: float


def nadir(trace: FrequencyTrace) -> NadirResult:
    """Minimum frequency at or after the event; earliest sample on ties."""
    i0 = int(np.searchsorted(trace.t, trace.t0 - 1e-9))
    seg = trace.f_hz[i0:]
    k = int(np.argmin(seg))
    return NadirResult(float(seg[k]), float(trace.t[i0 + k]))


def rocof(trace: FrequencyTrace, window_s: float = 0.5, span_s: float = 10.0) -> float:
    """Max-magnitude windowed slope after the event, signed, in mHz/s."""
    dt = trace.dt
    k = round(window_s / dt)
    if k < 2:
        raise ValueError("ROCOF window must cover at least 2 sample intervals")
    t_end = min(trace.t0 + span_s, float(trace.t[-1]))
    i0 = int(np.searchsorted(trace.t, trace.t0 - 1e-9))
    i_last = int(np.searchsorted(trace.t, t_end - window_s + 1e-9))
    if i_last < i0 or i0 + k >= trace.t.size:
        raise ValueError("trace shorter than the ROCOF window")
    i_last = min(i_last, trace.t.size - 1 - k)
    windows = np.lib.stride_tricks.sliding_window_view(trace.f_hz[i0:i_last + k + 1], k + 1)
    tc = (np.arange(k + 1) - k / 2.0) * dt
    slopes = windows @ (tc / np.dot(tc, tc))
    best = int(np.argmax(np.abs(slopes)))
    return float(slopes[best]) * 1e3


def settling_and_values(trace: FrequencyTrace) -> SettlingResult:
    """BAL-003-1 Value A (pre) and Value B (post) window means."""
    t, t0 = trace.t, trace.t0
    eps = 1e-9
    if t[0] > t0 - VALUE_A_SPAN_S + eps or t[-1] < t0 + VALUE_B_WINDOW_S[1] - eps:
        raise ValueError(
            f"insufficient span: trace must cover [t0-{VALUE_A_SPAN_S:g}, t0+{VALUE_B_WINDOW_S[1]:g}] s"
        )
    mask_a = (t >= t0 - VALUE_A_SPAN_S - eps) & (t < t0 - eps)
    mask_b = (t >= t0 + VALUE_B_WINDOW_S[0] - eps) & (t <= t0 + VALUE_B_WINDOW_S[1] + eps)
    a = float(trace.f_hz[mask_a].mean())
    b = float(trace.f_hz[mask_b].mean())
    return SettlingResult(value_a_hz=a, value_b_hz=b, settling_hz=b)


def nerc_frequency_response(trace: FrequencyTrace, delta_p_mw: float) -> float:
    """BAL-003-1 metric: lost MW per 0.1 Hz of (Value A - Value B)."""
    vals = settling_and_values(trace)
    drop = vals.value_a_hz - vals.value_b_hz
    if drop <= 0:
        raise ValueError("no frequency decline: Value A must exceed Value B")
    return delta_p_mw / drop * 0.1


@dataclass(frozen=True)
class MetricsReport:
    """Headline frequency-response numbers for one event."""

    nadir_hz: float
    t_nadir_s: float
    rocof_mhz_per_s: float | None = None
    value_a_hz: float | None = None
    value_b_hz: float | None = None
    settling_hz: float | None = None
    nerc_response_mw_per_0p1hz: float | None = None

    @classmethod
    def from_trace(
        cls,
        trace: FrequencyTrace,
        delta_p_mw: float | None = None,
        rocof_window_s: float = 0.5,
        strict: bool = False,
    ) -> "MetricsReport":
        """Compute every metric the trace span allows.

        With strict=True a span too short for the BAL-003-1 windows raises;
        otherwise the affected fields are left unset.
        """
        nd = nadir(trace)
        try:
            rc = rocof(trace, window_s=rocof_window_s)
        except ValueError:
            if strict:
                raise
            rc = None
        a = b = settling = response = None
        try:
            vals = settling_and_values(trace)
            a, b, settling = vals.value_a_hz, vals.value_b_hz, vals.settling_hz
            if delta_p_mw is not None and delta_p_mw > 0 and a > b:
                response = delta_p_mw / (a - b) * 0.1
        except ValueError:
            if strict:
                raise
        return cls(
            nadir_hz=nd.f_min_hz,
            t_nadir_s=nd.t_min_s,
            rocof_mhz_per_s=rc,
            value_a_hz=a,
            value_b_hz=b,
            settling_hz=settling,
            nerc_response_mw_per_0p1hz=response,
        )

    def to_doc(self) -> dict:
        doc = {
            "nadir_hz": self.nadir_hz,
            "t_nadir_s": self.t_nadir_s,
            "rocof_mhz_per_s": self.rocof_mhz_per_s,
            "value_a_hz": self.value_a_hz,
            "value_b_hz": self.value_b_hz,
            "settling_hz": self.settling_hz,
            "nerc_response_mw_per_0p1hz": self.nerc_response_mw_per_0p1hz,
        }
        return {k: v for k, v in doc.items() if v is not None}


@dataclass(frozen=True)
class MismatchReport:
    """Absolute per-metric errors between a simulation and a measurement."""

    nadir_hz: float
    rocof_mhz_per_s: float | None
    settling_hz: float | None


def mismatch_report(simulated: MetricsReport, measured: MetricsReport) -> MismatchReport:
    def gap(x, y):
        return None if x is None or y is None else abs(x - y)

    return MismatchReport(
        nadir_hz=abs(simulated.nadir_hz - measured.nadir_hz),
        rocof_mhz_per_s=gap(simulated.rocof_mhz_per_s, measured.rocof_mhz_per_s),
        settling_hz=gap(simulated.settling_hz, measured.settling_hz),
    )


@dataclass(frozen=True)
class ComplianceResult:
    passed: bool
    margin_mw_per_0p1hz: float


def compliance_check(response_mw_per_0p1hz: float, threshold_mw_per_0p1hz: float) -> ComplianceResult:
    """Pass when the frequency response meets or exceeds the recommendation."""
    if threshold_mw_per_0p1hz <= 0:
        raise ValueError("threshold must be positive")
    margin = response_mw_per_0p1hz - threshold_mw_per_0p1hz
    return ComplianceResult(passed=margin >= 0, margin_mw_per_0p1hz=margin)


def format_validation_table(measured: MetricsReport, simulated: MetricsReport) -> str:
    """Aligned Measurement / Simulated / Error table for the three headline metrics."""
    mm = mismatch_report(simulated, measured)
    rows = [("Metric", "Measurement", "Simulated", "Error")]

    def fmt(v, spec):
        return "-" if v is None else format(v, spec)

    rows.append(("Frequency nadir (Hz)", fmt(measured.nadir_hz, ".4f"),
                 fmt(simulated.nadir_hz, ".4f"), fmt(mm.nadir_hz, ".4f")))
    rows.append(("ROCOF (mHz/s)", fmt(measured.rocof_mhz_per_s, ".2f"),
                 fmt(simulated.rocof_mhz_per_s, ".2f"), fmt(mm.rocof_mhz_per_s, ".2f")))
    rows.append(("Settling frequency (Hz)", fmt(measured.settling_hz, ".4f"),
                 fmt(simulated.settling_hz, ".4f"), fmt(mm.settling_hz, ".4f")))
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    lines = ["  ".join(r[c].ljust(widths[c]) for c in range(4)).rstrip() for r in rows]
    return "\n".join(lines) + "\n"


def read_trace(path, column: str | None = None, t0: float | None = None,
               source: str = "measured") -> FrequencyTrace:
    """Load a delimited trace file (header row, time_s plus frequency columns).

    Measured FNET-style files carry a single ``frequency_hz`` column;
    simulation trace files carry one ``f_<area>`` column per area, so pick
    one with ``column``.
    """
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    cols = {name: k for k, name in enumerate(header)}
    if "time_s" not in cols:
        raise ValueError(f"{path}: trace file needs a time_s column")
    if column is None:
        freq_cols = [c for c in header if c == "frequency_hz" or c.startswith("f_")]
        if len(freq_cols) != 1:
            raise ValueError(
                f"{path}: pick a frequency column among {', '.join(freq_cols) or header}"
            )
        column = freq_cols[0]
    if column not in cols:
        raise ValueError(f"{path}: no column {column!r}")
    t = data[:, cols["time_s"]]
    f = data[:, cols[column]]
    return FrequencyTrace(t=t, f_hz=f, t0=t[0] if t0 is None else t0, source=source)


def read_report(path) -> MetricsReport:
    """Read back a metrics report written as a structured document."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    fields = ("nadir_hz", "t_nadir_s", "rocof_mhz_per_s", "value_a_hz",
              "value_b_hz", "settling_hz", "nerc_response_mw_per_0p1hz")
    return MetricsReport(**{k: doc.get(k) for k in fields})
