"""Cross-recording synchronization from jump landmarks.

Subjects jump before and after walking. The apex of each jump is located in
both recordings and an affine clock relation

    reference_time = rate * source_time + offset

is fitted through the matched apexes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .errors import InconsistentLandmarksError, InsufficientLandmarksError
from .ingest import JointId, SkeletonSequence

logger = logging.getLogger(__name__)

VERTICAL = 1


@dataclass(frozen=True)
class SyncParams:
    jump_height: float = 0.10
    min_jump_gap: float = 1.0
    # half-width (seconds) of the window used to refine each apex
    apex_window: float = 0.1


@dataclass(frozen=True)
class TimeMapping:
    offset: float = 0.0
    rate: float = 1.0

    def __post_init__(self):
        if not (self.rate > 0 and np.isfinite(self.rate) and np.isfinite(self.offset)):
            raise InconsistentLandmarksError(f"invalid time mapping rate={self.rate} offset={self.offset}")

    def to_reference(self, t):
        return self.rate * np.asarray(t, dtype=float) + self.offset

    def to_source(self, t):
        return (np.asarray(t, dtype=float) - self.offset) / self.rate

    def inverse(self) -> "TimeMapping":
        return TimeMapping(offset=-self.offset / self.rate, rate=1.0 / self.rate)

    def compose(self, other: "TimeMapping") -> "TimeMapping":
        """``self`` after ``other``."""
        return TimeMapping(offset=self.rate * other.offset + self.offset, rate=self.rate * other.rate)

    def to_dict(self) -> dict:
        return {"offset_s": float(self.offset), "rate": float(self.rate)}


def _elevation(seq: SkeletonSequence) -> np.ndarray:
    left = seq.joint(JointId.LEFT_ANKLE)[:, VERTICAL]
    right = seq.joint(JointId.RIGHT_ANKLE)[:, VERTICAL]
    stacked = np.column_stack([left, right])
    counts = np.isfinite(stacked).sum(axis=1)
    with np.errstate(invalid="ignore"):
        mean = np.nansum(stacked, axis=1) / counts
    ok = counts > 0
    if ok.sum() >= 2 and not ok.all():
        mean = np.interp(seq.times, seq.times[ok], mean[ok])
    return mean


def _refine_apex(t: np.ndarray, h: np.ndarray, k: int, half: int) -> float:
    """Vertex of a least-squares parabola through the samples around ``k``."""
    lo, hi = max(0, k - half), min(len(t) - 1, k + half)
    if hi - lo < 2:
        return float(t[k])
    tt = t[lo:hi + 1] - t[k]
    a, b, _ = np.polyfit(tt, h[lo:hi + 1], 2)
    if not a < 0:
        return float(t[k])
    vertex = -b / (2 * a)
    if abs(vertex) > (tt[-1] - tt[0]) / 2:
        return float(t[k])
    return float(t[k] + vertex)


def detect_jumps(seq: SkeletonSequence, params: SyncParams | None = None) -> list[float]:
    """Apex times of jumps in mean ankle elevation, in time order."""
    params = params or SyncParams()
    if seq.n_frames < 3:
        return []
    h = _elevation(seq)
    if not np.isfinite(h).any():
        return []
    baseline = float(np.nanmedian(h))
    h = np.where(np.isfinite(h), h, baseline)
    distance = max(1, int(round(params.min_jump_gap * seq.frame_rate)))
    peaks, _ = find_peaks(h, height=baseline + params.jump_height, distance=distance)
    half = max(1, int(round(params.apex_window * seq.frame_rate)))
    apexes = [_refine_apex(seq.times, h, int(k), half) for k in peaks]
    logger.debug("jump apexes: %s", apexes)
    return apexes


def align(source_jumps, reference_jumps) -> TimeMapping:
    """Affine clock mapping source -> reference from matched jump instants.

    Equal-length lists are matched pairwise (least squares beyond two pairs);
    otherwise only the first and last landmarks are matched.
    """
    src = np.asarray(source_jumps, dtype=float)
    ref = np.asarray(reference_jumps, dtype=float)
    if len(src) < 2 or len(ref) < 2:
        raise InsufficientLandmarksError(
            f"need at least 2 jumps in each recording, got {len(src)} and {len(ref)}"
        )
    if len(src) != len(ref):
        src = src[[0, -1]]
        ref = ref[[0, -1]]
    if len(src) == 2:
        if src[1] == src[0]:
            raise InconsistentLandmarksError("source landmarks coincide")
        rate = (ref[1] - ref[0]) / (src[1] - src[0])
        offset = ref[0] - rate * src[0]
    else:
        s_mean, r_mean = src.mean(), ref.mean()
        ds = src - s_mean
        denom = ds @ ds
        if denom == 0:
            raise InconsistentLandmarksError("source landmarks coincide")
        rate = (ds @ (ref - r_mean)) / denom
        offset = r_mean - rate * s_mean
    if not rate > 0:
        raise InconsistentLandmarksError(f"implied clock rate {rate} is not positive")
    return TimeMapping(offset=float(offset), rate=float(rate))


def resample_to(times, values, mapping: TimeMapping, target_times) -> np.ndarray:
    """Source ``values`` interpolated at reference ``target_times``.

    Targets mapping outside the source time span, or next to a missing
    source sample, come back as NaN.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    query = mapping.to_source(target_times)
    squeeze = values.ndim == 1
    vals = values[:, None] if squeeze else values.reshape(len(times), -1)
    out = np.full((len(query), vals.shape[1]), np.nan)
    if len(times) == 0:
        return out[:, 0] if squeeze else out.reshape((len(query),) + values.shape[1:])
    tol = 1e-9 * max(1.0, float(np.max(np.abs(times))))
    inside = (query >= times[0] - tol) & (query <= times[-1] + tol)
    q = np.clip(query[inside], times[0], times[-1])
    hi = np.clip(np.searchsorted(times, q, side="left"), 1, max(1, len(times) - 1))
    if len(times) == 1:
        res = np.broadcast_to(vals[0], (len(q), vals.shape[1]))
    else:
        lo = hi - 1
        span = times[hi] - times[lo]
        w = ((q - times[lo]) / span)[:, None]
        a, b = vals[lo], vals[hi]
        # an exact hit on a present sample must not be spoiled by a missing neighbour
        res = np.where(w == 0, a, np.where(w == 1, b, a + w * (b - a)))
    out[inside] = res
    return out[:, 0] if squeeze else out.reshape((len(query),) + values.shape[1:])
