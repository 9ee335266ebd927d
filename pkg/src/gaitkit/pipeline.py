"""End-to-end analysis and validation runs shared by the CLI and streaming mode."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace

import numpy as np

from .classify import Thresholds, classify, extract_features
from .errors import ConfigError, DimensionalityError, EmptyInputError, InsufficientDataError
from .events import EventParams, detect_all_events, events_to_csv, segment_cycles
from .ingest import (
    JsonSchemaOptions,
    Side,
    SkeletonSequence,
    fill_gaps,
    load_joint_order,
    normalize_axes,
    read_sequence,
    smooth,
)
from .kinematics import PARAMETERS, AngleSeries, angle_series
from .progression import fpa_to_csv, session_progression
from .sync import SyncParams, align, detect_jumps
from .validation import (
    REPORT_SCHEMA,
    ValidationReport,
    angular_errors,
    box_stats,
    box_stats_csv,
    cycle_error_curve,
    histogram,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    input: str | None = None
    reference: str | None = None
    out: str | None = None
    axes: str | None = None
    reference_axes: str | None = None
    joint_order: str | None = None
    confidence_floor: float = 0.1
    frame_rate: float | None = None
    max_gap_frames: int = 5
    smooth_window: int = 1
    events: EventParams = field(default_factory=EventParams)
    sync: SyncParams = field(default_factory=SyncParams)
    bin_width: float = 1.0
    n_points: int = 101
    thresholds: Thresholds = field(default_factory=Thresholds)
    condition: str = "unspecified"
    fpa_project: bool = True
    signed_errors: bool = False
    idle_timeout: float = 5.0
    stream_window: int = 90
    log_level: str = "WARNING"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        nested = {"events": EventParams, "sync": SyncParams, "thresholds": Thresholds}
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            if key in nested and isinstance(value, dict):
                sub_names = {f.name for f in fields(nested[key])}
                bad = set(value) - sub_names
                if bad:
                    raise ConfigError(f"unknown {key} keys: {sorted(bad)}")
                value = nested[key](**value)
            kwargs[key] = value
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(data)

    def updated(self, **overrides) -> "RunConfig":
        """Copy with non-None overrides; dotted keys reach nested params."""
        flat, nested = {}, {}
        for key, value in overrides.items():
            if value is None:
                continue
            if "." in key:
                group, name = key.split(".", 1)
                nested.setdefault(group, {})[name] = value
            else:
                flat[key] = value
        for group, values in nested.items():
            flat[group] = replace(getattr(self, group), **values)
        return replace(self, **flat)

    def schema_options(self, axes: str | None = None) -> JsonSchemaOptions:
        base = load_joint_order(self.joint_order) if self.joint_order else JsonSchemaOptions()
        return replace(
            base,
            confidence_floor=self.confidence_floor,
            frame_rate=self.frame_rate or base.frame_rate,
            axes=axes or base.axes,
        )


def clean_json(obj):
    """Recursively convert to JSON-safe builtins; non-finite floats become None."""
    if is_dataclass(obj) and not isinstance(obj, type):
        obj = asdict(obj)
    if isinstance(obj, dict):
        return {str(getattr(k, "value", k)): clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean_json(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dump_report(report: dict) -> str:
    return json.dumps(clean_json(report), indent=2, allow_nan=False) + "\n"


def prepare(seq: SkeletonSequence, config: RunConfig, axes: str | None = None) -> SkeletonSequence:
    seq = normalize_axes(seq, axes)
    seq = fill_gaps(seq, config.max_gap_frames)
    return smooth(seq, config.smooth_window)


def load_input(path, config: RunConfig, axes: str | None = None) -> SkeletonSequence:
    try:
        return read_sequence(path, config.schema_options(axes))
    except FileNotFoundError as exc:
        raise ConfigError(f"input not found: {path}") from exc


def _input_summary(seq: SkeletonSequence) -> dict:
    return {
        "frames": seq.n_frames,
        "dims": seq.dims,
        "frame_rate": seq.frame_rate,
        "filled_joint_frames": 0 if seq.filled is None else int(seq.filled.sum()),
    }


def _angle_summary(angles: AngleSeries) -> dict:
    out = {}
    for p in PARAMETERS:
        out[p] = {}
        for side in Side:
            col = angles.column(p, side)
            col = col[np.isfinite(col)]
            out[p][side.value] = box_stats(col).to_dict() if len(col) else None
    return out


def _fpa_box(samples) -> dict:
    groups = {side.value: [s.angle for s in samples if s.side is side] for side in Side}
    groups["all"] = [s.angle for s in samples]
    return {k: box_stats(v) for k, v in groups.items() if v}


def _classification(angles, events, fpa, thresholds):
    try:
        features = extract_features(angles, events, fpa)
    except InsufficientDataError as exc:
        return None, None, str(exc)
    result = classify(features, thresholds)
    return features, result, None


def analyze_sequence(seq: SkeletonSequence, config: RunConfig) -> tuple[dict, dict]:
    """Estimate-only analysis: angles, events, FPA and class.

    Returns the report and a name -> CSV text mapping of plot data.
    """
    if seq.n_frames == 0:
        raise EmptyInputError("input has no frames")
    seq = prepare(seq, config)
    angles = angle_series(seq)
    events = detect_all_events(seq, config.events)
    cycles = {side: segment_cycles(events[side]) for side in Side}
    all_cycles = cycles[Side.LEFT] + cycles[Side.RIGHT]
    fpa = session_progression(seq, all_cycles, project=config.fpa_project)
    features, result, reason = _classification(angles, events, fpa, config.thresholds)
    fpa_box = _fpa_box(fpa)

    report = {
        "schema": REPORT_SCHEMA,
        "kind": "analyze",
        "config": config.to_dict(),
        "condition": config.condition,
        "input": _input_summary(seq),
        "angles": _angle_summary(angles),
        "events": [
            {"kind": e.kind.value, "side": e.side.value, "frame": e.frame_index, "t": e.timestamp}
            for side in Side
            for e in events[side]
        ],
        "cycles": {side.value: len(cycles[side]) for side in Side},
        "fpa": [{"cycle_start_frame": s.cycle.start.frame_index, "side": s.side.value, "fpa_deg": s.angle} for s in fpa],
        "fpa_box": {config.condition: {k: b.to_dict() for k, b in fpa_box.items()}},
        "features": None if features is None else features.to_dict(),
        "classification": None if result is None else result.to_dict(),
    }
    if reason:
        report["classification_skipped"] = reason
    artifacts = {
        "angles.csv": angles.to_csv(),
        "events.csv": events_to_csv(events[Side.LEFT] + events[Side.RIGHT]),
        "fpa.csv": fpa_to_csv(fpa),
        "fpa_box.csv": box_stats_csv(fpa_box),
    }
    return report, artifacts


def validate_sequences(est: SkeletonSequence, ref: SkeletonSequence, config: RunConfig) -> tuple[dict, dict]:
    """Synchronize, compare and summarize an estimate against a reference."""
    if est.dims != ref.dims:
        raise DimensionalityError(f"estimate is {est.dims}D but reference is {ref.dims}D")
    if est.n_frames == 0 or ref.n_frames == 0:
        raise EmptyInputError("estimate or reference has no frames")
    est = prepare(est, config)
    ref = prepare(ref, config, config.reference_axes)
    mapping = align(detect_jumps(est, config.sync), detect_jumps(ref, config.sync))

    est_angles = angle_series(est)
    ref_angles = angle_series(ref)
    errs = angular_errors(est_angles, ref_angles, mapping, signed=config.signed_errors)
    ref_events = detect_all_events(ref, config.events)
    ref_cycles = [c for side in Side for c in segment_cycles(ref_events[side])]

    histograms, curves, means = {}, {}, {}
    for p in PARAMETERS:
        pooled = errs.pooled(p)
        if len(pooled) == 0:
            continue
        means[p] = float(np.mean(pooled))
        if not config.signed_errors:
            histograms[p] = histogram(pooled, config.bin_width)
        series = {side: (errs.times, errs.get(p, side)) for side in Side}
        try:
            curves[p] = cycle_error_curve(series, ref_cycles, config.n_points)
        except InsufficientDataError as exc:
            logger.info("no cycle curve for %s: %s", p, exc)

    est_events = detect_all_events(est, config.events)
    est_cycles = [c for side in Side for c in segment_cycles(est_events[side])]
    fpa = session_progression(est, est_cycles, project=config.fpa_project)
    _, result, _ = _classification(est_angles, est_events, fpa, config.thresholds)

    report = ValidationReport(
        condition=config.condition,
        histograms=histograms,
        cycle_curves=curves,
        fpa_box=_fpa_box(fpa),
        mapping=mapping,
        frame_counts={
            "estimate": est.n_frames,
            "reference": ref.n_frames,
            "aligned": errs.aligned_frames,
            "excluded": {f"{p}/{s.value}": n for (p, s), n in errs.excluded.items()},
        },
        mean_errors=means,
        config=config.to_dict(),
        classification=None if result is None else result.to_dict(),
        extra={"cycles_reference": len(ref_cycles)},
    ).to_dict()

    artifacts = {}
    for p, h in histograms.items():
        artifacts[f"histogram_{p}.csv"] = h.to_csv()
    for p, c in curves.items():
        artifacts[f"cycle_curve_{p}.csv"] = c.to_csv()
    artifacts["fpa_box.csv"] = box_stats_csv(_fpa_box(fpa))
    return report, artifacts


def classify_sequence(seq: SkeletonSequence, config: RunConfig) -> dict:
    if seq.n_frames == 0:
        raise EmptyInputError("input has no frames")
    seq = prepare(seq, config)
    angles = angle_series(seq)
    events = detect_all_events(seq, config.events)
    cycles = [c for side in Side for c in segment_cycles(events[side])]
    fpa = session_progression(seq, cycles, project=config.fpa_project)
    features = extract_features(angles, events, fpa)
    result = classify(features, config.thresholds)
    return {"features": features.to_dict(), **result.to_dict()}
