"""Angular error metrics and report artifacts.

Three artifacts summarize an estimate against a reference recording:
error histograms (percentage of frames per error bin), mean error curves over
the normalized gait cycle, and box-chart statistics.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyInputError, EmptyOverlapError
from .events import normalize_cycle
from .ingest import Side
from .kinematics import PARAMETERS, AngleSeries
from .sync import TimeMapping, resample_to

REPORT_SCHEMA = "gaitkit-report/1"


@dataclass(frozen=True, eq=False)
class AngularErrors:
    """Per-frame errors on the reference timeline, NaN where not aligned."""

    times: np.ndarray
    errors: dict
    excluded: dict
    signed: bool = False

    def get(self, parameter: str, side: Side) -> np.ndarray:
        return self.errors[(parameter, side)]

    def pooled(self, parameter: str) -> np.ndarray:
        vals = np.concatenate([self.errors[(parameter, s)] for s in Side])
        return vals[np.isfinite(vals)]

    @property
    def aligned_frames(self) -> dict:
        return {f"{p}/{s.value}": int(np.isfinite(v).sum()) for (p, s), v in self.errors.items()}


def angular_errors(
    est: AngleSeries,
    ref: AngleSeries,
    mapping: TimeMapping | None = None,
    signed: bool = False,
) -> AngularErrors:
    """|est - ref| per reference frame, with est resampled onto reference time."""
    if len(est) == 0 or len(ref) == 0:
        raise EmptyOverlapError("angle series is empty")
    mapping = mapping or TimeMapping()
    errors, excluded = {}, {}
    total = 0
    for side in Side:
        est_on_ref = resample_to(est.times, est.values[side], mapping, ref.times)
        diff = est_on_ref - ref.values[side]
        if not signed:
            diff = np.abs(diff)
        for k, p in enumerate(PARAMETERS):
            col = diff[:, k]
            errors[(p, side)] = col
            excluded[(p, side)] = int((~np.isfinite(col)).sum())
            total += int(np.isfinite(col).sum())
    if total == 0:
        raise EmptyOverlapError("no frame is present in both series after alignment")
    return AngularErrors(times=np.array(ref.times), errors=errors, excluded=excluded, signed=signed)


@dataclass(frozen=True)
class ErrorHistogram:
    bin_width: float
    bins: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]
    total_frames: int

    def to_dict(self) -> dict:
        return {
            "bin_width": self.bin_width,
            "total_frames": self.total_frames,
            "bins": [{"lower_edge": lo, "percentage": pct, "count": c} for (lo, pct), c in zip(self.bins, self.counts)],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lower_edge_deg", "upper_edge_deg", "count", "percentage"])
        for (lo, pct), c in zip(self.bins, self.counts):
            w.writerow([repr(lo), repr(lo + self.bin_width), c, repr(pct)])
        return buf.getvalue()


def _bin_index(values: np.ndarray, width: float) -> np.ndarray:
    k = np.floor(values / width).astype(np.int64)
    # floor(e / w) can land one bin off the edge products k * w; the edges win
    k = np.where(k * width > values, k - 1, k)
    k = np.where((k + 1) * width <= values, k + 1, k)
    return k


def histogram(errors, bin_width: float = 1.0) -> ErrorHistogram:
    """Right-open bins ``[k*w, (k+1)*w)`` from 0 up to the largest error."""
    if not bin_width > 0:
        raise ConfigError("bin width must be positive")
    e = np.asarray(errors, dtype=float).ravel()
    e = e[np.isfinite(e)]
    if len(e) == 0:
        raise EmptyInputError("no errors to bin")
    if (e < 0).any():
        raise ConfigError("histogram expects non-negative errors")
    k = _bin_index(e, bin_width)
    counts = np.bincount(k, minlength=int(k.max()) + 1)
    total = len(e)
    bins = tuple((float(i * bin_width), float(c) / total * 100.0) for i, c in enumerate(counts))
    return ErrorHistogram(float(bin_width), bins, tuple(int(c) for c in counts), total)


@dataclass(frozen=True)
class CycleErrorCurve:
    points: tuple[float, ...]
    cycles_averaged: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["percent_cycle", "mean_error_deg"])
        n = len(self.points)
        for i, v in enumerate(self.points):
            w.writerow([repr(100.0 * i / (n - 1)), repr(v)])
        return buf.getvalue()


def cycle_error_curve(series_by_side, cycles, n_points: int = 101) -> CycleErrorCurve:
    """Pointwise mean over cycles of the cycle-normalized error series.

    ``series_by_side`` maps a side to ``(times, errors)``; a bare
    ``(times, errors)`` pair is used for every cycle regardless of side.
    Cycles that do not overlap their series are skipped.
    """
    curves = []
    for cycle in cycles:
        if isinstance(series_by_side, dict):
            if cycle.side not in series_by_side:
                continue
            times, values = series_by_side[cycle.side]
        else:
            times, values = series_by_side
        try:
            curves.append(normalize_cycle(times, values, cycle, n_points))
        except (EmptyInputError, ValueError):
            continue
    if not curves:
        raise EmptyInputError("no cycle overlaps the error series")
    mean = np.mean(np.vstack(curves), axis=0)
    return CycleErrorCurve(tuple(float(v) for v in mean), len(curves))


@dataclass(frozen=True)
class BoxStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    outliers: tuple[float, ...]
    n: int

    def to_dict(self) -> dict:
        return {
            "min": self.min,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.max,
            "outliers": list(self.outliers),
            "n": self.n,
        }


def _quantile_sorted(xs: np.ndarray, num: int, den: int) -> float:
    # position (n - 1) * num / den between order statistics, integer arithmetic
    pos = (len(xs) - 1) * num
    lo, rem = divmod(pos, den)
    if rem == 0:
        return float(xs[lo])
    frac = rem / den
    return float(xs[lo] + frac * (xs[lo + 1] - xs[lo]))


def box_stats(values) -> BoxStats:
    """Five-number summary with linearly interpolated (inclusive) quartiles.

    ``min``/``max`` are the data extremes; ``outliers`` are the values outside
    the 1.5 * IQR fences.
    """
    xs = np.sort(np.asarray(values, dtype=float).ravel())
    xs = xs[np.isfinite(xs)]
    if len(xs) == 0:
        raise EmptyInputError("no values for box statistics")
    q1 = _quantile_sorted(xs, 1, 4)
    med = _quantile_sorted(xs, 1, 2)
    q3 = _quantile_sorted(xs, 3, 4)
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    outliers = tuple(float(v) for v in xs if v < lo_fence or v > hi_fence)
    return BoxStats(float(xs[0]), q1, med, q3, float(xs[-1]), outliers, len(xs))


def box_stats_csv(rows: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group", "n", "min", "q1", "median", "q3", "max", "outliers"])
    for name, b in rows.items():
        w.writerow([name, b.n, repr(b.min), repr(b.q1), repr(b.median), repr(b.q3), repr(b.max),
                    ";".join(repr(o) for o in b.outliers)])
    return buf.getvalue()


@dataclass
class ValidationReport:
    """Everything one validation run produces; serialized as one JSON document."""

    condition: str
    histograms: dict = field(default_factory=dict)
    cycle_curves: dict = field(default_factory=dict)
    fpa_box: dict = field(default_factory=dict)
    mapping: TimeMapping | None = None
    frame_counts: dict = field(default_factory=dict)
    mean_errors: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    classification: dict | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "schema": REPORT_SCHEMA,
            "kind": "validate",
            "config": self.config,
            "conditions": [self.condition],
            "mapping": None if self.mapping is None else self.mapping.to_dict(),
            "frame_counts": {self.condition: self.frame_counts},
            "histograms": {p: {self.condition: h.to_dict()} for p, h in self.histograms.items()},
            "mean_abs_error_deg": {p: {self.condition: v} for p, v in self.mean_errors.items()},
            "cycle_curves": {
                p: {"cycles_averaged": c.cycles_averaged, "points": list(c.points)}
                for p, c in self.cycle_curves.items()
            },
            "fpa_box": {self.condition: {k: b.to_dict() for k, b in self.fpa_box.items()}},
            "classification": self.classification,
        }
        out.update(self.extra)
        return out


def finite_or_none(x: float) -> float | None:
    return None if x is None or not math.isfinite(x) else float(x)
