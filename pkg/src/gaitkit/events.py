"""Heel-strike / toe-off detection, gait cycles and cycle normalization.

Detection is threshold based. A foot is "stopped" while the forward velocity
of its ankle stays below ``v_stop``; each stopped interval is a stance
candidate. Velocities are central differences (one-sided at the ends) of the
optionally smoothed positions. Event instants are then refined on the
unsmoothed heights, since smoothing drags them towards swing: the heel strike
is the first frame near the interval start at stance ankle height, the toe
off the last frame at stance toe height before the toe lifts.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, MissingJointError, RangeError, SequencingError
from .ingest import JointId, Side, SkeletonSequence, smooth
from .kinematics import walking_direction

logger = logging.getLogger(__name__)

VERTICAL = 1


class EventKind(str, Enum):
    HEEL_STRIKE = "HS"
    TOE_OFF = "TO"


@dataclass(frozen=True)
class GaitEvent:
    kind: EventKind
    side: Side
    frame_index: int
    timestamp: float


@dataclass(frozen=True)
class GaitCycle:
    side: Side
    start: GaitEvent
    toe_off: GaitEvent
    end: GaitEvent

    @property
    def duration(self) -> float:
        return self.end.timestamp - self.start.timestamp

    @property
    def stance_duration(self) -> float:
        return self.toe_off.timestamp - self.start.timestamp

    @property
    def stance_fraction(self) -> float:
        return self.stance_duration / self.duration


@dataclass(frozen=True)
class EventParams:
    v_stop: float = 0.05
    v_lift: float = 0.10
    # seconds; converted to frames as round(refractory_s * frame_rate)
    refractory_s: float = 0.2
    smooth_window: int = 1

    def refractory_frames(self, frame_rate: float) -> int:
        return max(1, int(round(self.refractory_s * frame_rate)))


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive (start, end) index pairs of True runs."""
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(a), int(b) - 1) for a, b in zip(edges[::2], edges[1::2])]


def _clean_mask(mask: np.ndarray, min_len: int) -> np.ndarray:
    """Bridge False gaps shorter than ``min_len`` then drop short True runs.

    Gaps touching either end are bridged too: a motion shorter than the
    refractory period cannot hold a full swing.
    """
    out = mask.copy()
    for a, b in _runs(~out):
        if (b - a + 1) < min_len and out.any():
            out[a:b + 1] = True
    for a, b in _runs(out):
        if (b - a + 1) < min_len:
            out[a:b + 1] = False
    return out


def _velocity(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    if len(t) < 2:
        return np.zeros_like(x)
    return np.gradient(x, t, axis=0, edge_order=1)


def detect_events(seq: SkeletonSequence, side: Side, params: EventParams | None = None) -> list[GaitEvent]:
    params = params or EventParams()
    ankle_id, toe_id = JointId.of(side, "ankle"), JointId.of(side, "toe")
    for jid in (ankle_id, toe_id):
        if not seq.has_joint(jid):
            raise MissingJointError(jid)
    n = seq.n_frames
    r = params.refractory_frames(seq.frame_rate)
    if n < 2 * r + 2:
        return []
    work = smooth(seq, params.smooth_window) if params.smooth_window > 1 else seq
    t = work.times
    forward = walking_direction(work)

    ankle = _interp_missing(work.joint(ankle_id), t)
    toe = _interp_missing(work.joint(toe_id), t)
    v_forward = _velocity(ankle, t) @ forward
    v_toe_up = _velocity(toe[:, VERTICAL], t)
    ankle_height = _interp_missing(seq.joint(ankle_id), t)[:, VERTICAL]
    toe_height = _interp_missing(seq.joint(toe_id), t)[:, VERTICAL]

    stopped = _clean_mask(v_forward < params.v_stop, r)
    candidates: list[tuple[int, EventKind, float]] = []
    for a, b in _runs(stopped):
        if a > 0:
            k, strength = _contact_frame(ankle_height, a, b, r)
            candidates.append((k, EventKind.HEEL_STRIKE, strength))
        if b < n - 1:
            lo, hi = max(a, b - r), min(n - 1, b + r)
            rising = np.flatnonzero(v_toe_up[lo:hi + 1] > params.v_lift)
            if len(rising):
                k = _lift_frame(toe_height, a, b, lo + int(rising[0]), hi)
                candidates.append((k, EventKind.TOE_OFF, float(v_toe_up[lo + int(rising[0])])))
    candidates.sort(key=lambda c: c[0])

    merged: list[tuple[int, EventKind, float]] = []
    for cand in candidates:
        if merged and merged[-1][1] == cand[1] and cand[0] - merged[-1][0] <= r:
            if cand[2] > merged[-1][2]:
                merged[-1] = cand
            continue
        merged.append(cand)
    alternating: list[tuple[int, EventKind, float]] = []
    for cand in merged:
        if alternating and alternating[-1][1] == cand[1]:
            if cand[2] > alternating[-1][2]:
                alternating[-1] = cand
            continue
        if alternating and cand[0] <= alternating[-1][0]:
            continue
        alternating.append(cand)
    return [GaitEvent(kind, side, int(seq.frame_index[k]), float(seq.times[k])) for k, kind, _ in alternating]


def _stance_level(height: np.ndarray, a: int, b: int) -> tuple[float, float]:
    """Median height over run ``[a, b]`` and a tolerance of three robust SDs.

    On noiseless data the tolerance collapses to rounding level, so refined
    events land on the first / last exactly-flat frame.
    """
    run = height[a:b + 1]
    base = float(np.median(run))
    mad = float(np.median(np.abs(run - base)))
    return base, 3.0 * 1.4826 * mad + 1e-9 * max(1.0, abs(base))


def _lift_frame(height: np.ndarray, a: int, b: int, first_rising: int, hi: int) -> int:
    """Last frame at stance toe height before the toe leaves it for good."""
    base, tol = _stance_level(height, a, b)
    above = np.flatnonzero(height[a:hi + 1] > base + tol) + a
    # the lift must not be a lone noisy frame: take the first frame from which
    # the toe stays up through the end of the search window
    for k in above:
        if k >= max(a + 1, first_rising - 2) and (height[k:hi + 1] > base + tol).all():
            return int(k) - 1
    return first_rising


def _contact_frame(height: np.ndarray, a: int, b: int, r: int) -> tuple[int, float]:
    """First frame near the start of stance run ``[a, b]`` at stance height."""
    lo, hi = max(0, a - r), min(len(height) - 1, a + 1)
    base, tol = _stance_level(height, a, b)
    window = height[lo:hi + 1]
    near = np.flatnonzero(window <= base + tol)
    k = lo + int(near[0]) if len(near) else lo + int(np.argmin(window))
    return k, float(np.max(window) - base)


def _interp_missing(x: np.ndarray, t: np.ndarray) -> np.ndarray:
    ok = np.isfinite(x).all(axis=1)
    if ok.all():
        return x
    out = np.array(x)
    for d in range(x.shape[1]):
        out[:, d] = np.interp(t, t[ok], x[ok, d])
    return out


def detect_all_events(seq: SkeletonSequence, params: EventParams | None = None) -> dict[Side, list[GaitEvent]]:
    return {side: detect_events(seq, side, params) for side in Side}


def segment_cycles(events: list[GaitEvent]) -> list[GaitCycle]:
    """One cycle per consecutive (HS, TO, HS) triple of a single side."""
    for prev, cur in zip(events, events[1:]):
        if prev.side != cur.side:
            raise SequencingError("events from both sides mixed in one list")
        if prev.kind == cur.kind:
            raise SequencingError(f"two consecutive {cur.kind.value} events at frames {prev.frame_index}, {cur.frame_index}")
        if not cur.timestamp > prev.timestamp:
            raise SequencingError("events are not increasing in time")
    cycles = []
    for i, ev in enumerate(events[:-2]):
        if ev.kind is EventKind.HEEL_STRIKE:
            cycles.append(GaitCycle(ev.side, ev, events[i + 1], events[i + 2]))
    return cycles


def normalize_cycle(times, values, cycle: GaitCycle, n_points: int = 101) -> np.ndarray:
    """Resample ``values`` onto ``n_points`` equal fractions of the cycle.

    NaN samples are interpolated across from their present neighbours.
    """
    if n_points < 2:
        raise ConfigError("n_points must be >= 2")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    ok = np.isfinite(values)
    t0, t1 = cycle.start.timestamp, cycle.end.timestamp
    if not ok.any():
        raise RangeError("series has no values")
    tk, vk = times[ok], values[ok]
    tol = 1e-9 * max(1.0, abs(t1))
    if t0 < tk[0] - tol or t1 > tk[-1] + tol:
        raise RangeError(f"cycle [{t0}, {t1}] outside series range [{tk[0]}, {tk[-1]}]")
    query = t0 + np.linspace(0.0, 1.0, n_points) * (t1 - t0)
    return np.interp(query, tk, vk)


def events_to_csv(events) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "side", "frame", "t"])
    for ev in sorted(events, key=lambda e: (e.timestamp, e.side.value)):
        writer.writerow([ev.kind.value, ev.side.value, ev.frame_index, repr(ev.timestamp)])
    return buf.getvalue()
