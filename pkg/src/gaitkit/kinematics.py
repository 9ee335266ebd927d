"""Link vectors and frame-wise gait angles.

Each side is modelled by three joints: knee, ankle and toe. The shank link
points knee -> ankle (``ankle - knee``) and the foot link toe -> ankle
(``ankle - toe``). The generic angle between two links is the arccos of their
normalized dot product; it is instantiated three ways:

* inversion/eversion: foot vs the horizontal plane (normal = up)
* dorsiflexion/plantarflexion: foot vs the frontal plane (normal = walking direction)
* ankle angle: foot vs shank

"A vector's angle to a plane" is ``90 - angle(vector, plane normal)``, so a
vector lying in the plane reads 0 and the sign follows the normal.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateGeometryError, MissingJointError
from .ingest import JointId, Side, SkeletonFrame, SkeletonSequence

logger = logging.getLogger(__name__)

MIN_LINK_LENGTH = 1e-6
PARAMETERS = ("inversion_eversion", "dorsiflexion_plantarflexion", "ankle")
CSV_COLUMNS = {
    "inversion_eversion": "inv_ev_deg",
    "dorsiflexion_plantarflexion": "dorsi_plantar_deg",
    "ankle": "ankle_deg",
}

__all__ = [
    "Side",
    "LinkVectors",
    "ReferenceVector",
    "ReferenceKind",
    "AngleSample",
    "AngleSeries",
    "AngleConfig",
    "link_vectors",
    "angle_between",
    "inversion_eversion",
    "dorsiflexion_plantarflexion",
    "ankle_angle",
    "angle_series",
    "up_vector",
    "walking_direction",
]


@dataclass(frozen=True)
class LinkVectors:
    shank: np.ndarray
    foot: np.ndarray
    side: Side
    frame_index: int


class ReferenceKind(str, Enum):
    HORIZONTAL_PLANE_NORMAL = "horizontal_plane_normal"
    FRONTAL_PLANE_NORMAL = "frontal_plane_normal"
    SHANK = "shank"


@dataclass(frozen=True)
class ReferenceVector:
    kind: ReferenceKind
    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise DegenerateGeometryError("reference vector has zero length")
        object.__setattr__(self, "vector", v / norm)


@dataclass(frozen=True)
class AngleSample:
    frame_index: int
    timestamp: float
    side: Side
    inversion_eversion: float
    dorsiflexion_plantarflexion: float
    ankle: float


def _joint_triplet(side: Side) -> tuple[JointId, JointId, JointId]:
    return JointId.of(side, "knee"), JointId.of(side, "ankle"), JointId.of(side, "toe")


def link_vectors(frame: SkeletonFrame, side: Side) -> LinkVectors:
    knee_id, ankle_id, toe_id = _joint_triplet(side)
    pts = {}
    for jid in (knee_id, ankle_id, toe_id):
        if jid not in frame.positions:
            raise MissingJointError(jid, f"frame {frame.frame_index}: missing joint {jid.value}")
        pts[jid] = np.asarray(frame.positions[jid], dtype=float)
    shank = pts[ankle_id] - pts[knee_id]
    foot = pts[ankle_id] - pts[toe_id]
    for name, vec in (("shank", shank), ("foot", foot)):
        if np.linalg.norm(vec) < MIN_LINK_LENGTH:
            raise DegenerateGeometryError(f"frame {frame.frame_index}: {side.value} {name} link has zero length")
    return LinkVectors(shank=shank, foot=foot, side=side, frame_index=frame.frame_index)


def _cross_norm(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    if u.shape[-1] == 2:
        return np.abs(u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])
    return np.linalg.norm(np.cross(u, v), axis=-1)


def _angle_deg(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # atan2(|u x v|, u.v) equals arccos(u.v / |u||v|) but stays accurate near
    # 0 and 180 degrees and never leaves [0, 180]
    return np.degrees(np.arctan2(_cross_norm(u, v), np.sum(u * v, axis=-1)))


def angle_between(u, v) -> float:
    """Angle in degrees, in [0, 180], between two nonzero vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if not (np.linalg.norm(u) > 0 and np.linalg.norm(v) > 0):
        raise DegenerateGeometryError("angle with a zero-length vector")
    return float(_angle_deg(u, v))


def inversion_eversion(link: LinkVectors, up) -> float:
    return 90.0 - angle_between(link.foot, up)


def dorsiflexion_plantarflexion(link: LinkVectors, progression) -> float:
    return 90.0 - angle_between(link.foot, progression)


def ankle_angle(link: LinkVectors) -> float:
    return angle_between(link.foot, link.shank)


def up_vector(dims: int) -> np.ndarray:
    return np.array([0.0, 1.0]) if dims == 2 else np.array([0.0, 1.0, 0.0])


def walking_direction(seq: SkeletonSequence) -> np.ndarray:
    """Unit horizontal direction of net travel of the mean ankle position.

    Falls back to +depth (+x in 2D) when the ankles do not travel.
    """
    dims = seq.dims
    fallback = np.array([1.0, 0.0]) if dims == 2 else np.array([0.0, 0.0, 1.0])
    left = seq.joint(JointId.LEFT_ANKLE)
    right = seq.joint(JointId.RIGHT_ANKLE)
    both = np.isfinite(left).all(axis=1) & np.isfinite(right).all(axis=1)
    if both.sum() >= 2:
        track = 0.5 * (left[both] + right[both])
    else:
        one = left if np.isfinite(left).all(axis=1).sum() >= 2 else right
        track = one[np.isfinite(one).all(axis=1)]
        if len(track) < 2:
            return fallback
    disp = track[-1] - track[0]
    disp[1] = 0.0
    norm = np.linalg.norm(disp)
    if norm < MIN_LINK_LENGTH:
        return fallback
    return disp / norm


@dataclass(frozen=True)
class AngleConfig:
    up: tuple[float, ...] | None = None
    progression: tuple[float, ...] | None = None


@dataclass(frozen=True, eq=False)
class AngleSeries:
    """Per-frame angles for both sides; NaN rows mean "no sample"."""

    frame_index: np.ndarray
    times: np.ndarray
    values: dict
    dims: int

    def __post_init__(self):
        for side in Side:
            arr = np.asarray(self.values[side], dtype=float)
            if arr.shape != (len(self.times), len(PARAMETERS)):
                raise ValueError(f"angle array for {side.value} has shape {arr.shape}")

    def __len__(self) -> int:
        return len(self.times)

    def column(self, parameter: str, side: Side) -> np.ndarray:
        return self.values[side][:, PARAMETERS.index(parameter)]

    def valid(self, side: Side) -> np.ndarray:
        return np.isfinite(self.values[side]).all(axis=1)

    @property
    def samples(self) -> list[AngleSample]:
        out = []
        for i in range(len(self.times)):
            for side in Side:
                row = self.values[side][i]
                if np.isfinite(row).all():
                    out.append(AngleSample(int(self.frame_index[i]), float(self.times[i]), side, *map(float, row)))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["frame", "t", "side"] + [CSV_COLUMNS[p] for p in PARAMETERS])
        for s in self.samples:
            writer.writerow(
                [s.frame_index, repr(s.timestamp), s.side.value]
                + [repr(getattr(s, p)) for p in PARAMETERS]
            )
        return buf.getvalue()

    @classmethod
    def empty(cls, dims: int = 3) -> "AngleSeries":
        return cls(
            frame_index=np.zeros(0, dtype=np.int64),
            times=np.zeros(0),
            values={s: np.zeros((0, 3)) for s in Side},
            dims=dims,
        )


def angle_series(seq: SkeletonSequence, config: AngleConfig | None = None) -> AngleSeries:
    """Angles for every frame and side whose knee, ankle and toe are present.

    Expects a normalized sequence (vertical axis = index 1, up). For 2D input
    the image plane is used: up is image-vertical, progression image-horizontal.
    """
    config = config or AngleConfig()
    dims = seq.dims
    up = np.asarray(config.up, dtype=float) if config.up is not None else up_vector(dims)
    up = up / np.linalg.norm(up)
    if config.progression is not None:
        prog = np.asarray(config.progression, dtype=float)
        prog = prog / np.linalg.norm(prog)
    else:
        prog = walking_direction(seq)

    values = {}
    for side in Side:
        knee_id, ankle_id, toe_id = _joint_triplet(side)
        knee, ankle, toe = seq.joint(knee_id), seq.joint(ankle_id), seq.joint(toe_id)
        shank = ankle - knee
        foot = ankle - toe
        with np.errstate(invalid="ignore"):
            ok = (
                np.isfinite(shank).all(axis=1)
                & np.isfinite(foot).all(axis=1)
                & (np.linalg.norm(shank, axis=1) >= MIN_LINK_LENGTH)
                & (np.linalg.norm(foot, axis=1) >= MIN_LINK_LENGTH)
            )
        out = np.full((seq.n_frames, 3), np.nan)
        if ok.any():
            f, s = foot[ok], shank[ok]
            out[ok, 0] = 90.0 - _angle_deg(f, np.broadcast_to(up, f.shape))
            out[ok, 1] = 90.0 - _angle_deg(f, np.broadcast_to(prog, f.shape))
            out[ok, 2] = _angle_deg(f, s)
        skipped = seq.n_frames - int(ok.sum())
        if skipped:
            logger.info("%s: %d of %d frames skipped (missing or degenerate joints)", side.value, skipped, seq.n_frames)
        values[side] = out
    return AngleSeries(frame_index=np.array(seq.frame_index), times=np.array(seq.times), values=values, dims=dims)
