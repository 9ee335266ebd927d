"""Line of progression and foot progression angle (FPA).

The line is parameterized as ``x = m*z + x0``, ``y = n*z + y0`` (depth ``z`` is
the free coordinate) and fitted from the 2x2 normal equations

    [[m, x0], [n, y0]] = [[Sxz, Sx], [Syz, Sy]] @ inv([[Szz, Sz], [Sz, N]])

with ``N`` the number of points. Sums are taken about the mean depth so the
system stays well conditioned far from the origin; the intercepts are shifted
back afterwards, which gives the same solution.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFitError, EmptyInputError
from .events import GaitCycle
from .ingest import JointId, Side, SkeletonSequence

logger = logging.getLogger(__name__)

MIN_Z_SPREAD = 1e-9
MIN_PROJECTION = 1e-6
UP = np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class ProgressionLine:
    m: float
    n: float
    x0: float
    y0: float
    direction: np.ndarray

    @classmethod
    def from_params(cls, m: float, n: float, x0: float, y0: float) -> "ProgressionLine":
        d = np.array([m, n, 1.0])
        return cls(float(m), float(n), float(x0), float(y0), d / np.linalg.norm(d))

    def oriented(self, toward) -> "ProgressionLine":
        """Same line with ``direction`` flipped to agree with ``toward``."""
        if float(np.dot(self.direction, toward)) < 0:
            return ProgressionLine(self.m, self.n, self.x0, self.y0, -self.direction)
        return self

    def point_at(self, z: float) -> np.ndarray:
        return np.array([self.m * z + self.x0, self.n * z + self.y0, z])


@dataclass(frozen=True)
class FootProgressionSample:
    cycle: GaitCycle
    side: Side
    angle: float


def fit_progression_line(points) -> ProgressionLine:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DegenerateFitError(f"need an (N, 3) array of points, got shape {pts.shape}")
    if len(pts) < 2:
        raise DegenerateFitError(f"need at least 2 points, got {len(pts)}")
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    if np.ptp(z) <= MIN_Z_SPREAD:
        raise DegenerateFitError("depth spread too small to fit x(z), y(z)")
    z_ref = z.mean()
    zc = z - z_ref
    count = float(len(z))
    lhs = np.array([[zc @ zc, zc.sum()], [zc.sum(), count]])
    rhs = np.array([[x @ zc, x.sum()], [y @ zc, y.sum()]])
    # solve(A, B^T)^T == B @ inv(A) for the symmetric A above
    (m, x0c), (n, y0c) = np.linalg.solve(lhs, rhs.T).T
    return ProgressionLine.from_params(m, n, x0c - m * z_ref, y0c - n * z_ref)


def fit_residuals(points, line: ProgressionLine) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    z = pts[:, 2]
    return np.column_stack([pts[:, 0] - (line.m * z + line.x0), pts[:, 1] - (line.n * z + line.y0)])


def _side_sign(side: Side) -> float:
    # with x lateral, y up, z forward a left toe-out turns the foot toward +x,
    # which gives a positive vertical cross product; the right foot mirrors it
    return 1.0 if Side(side) is Side.LEFT else -1.0


def foot_progression_angle(
    foot_vectors,
    line: ProgressionLine,
    side: Side = Side.LEFT,
    project: bool = True,
    up=UP,
) -> float:
    """Mean signed angle (toe-out positive) between foot axes and the line.

    ``foot_vectors`` point along the foot, ankle -> toe (or heel -> toe).
    Frames whose horizontal projection is shorter than 1e-6 are skipped.
    """
    feet = np.atleast_2d(np.asarray(foot_vectors, dtype=float))
    if feet.size == 0:
        raise EmptyInputError("no stance-phase foot vectors")
    up = np.asarray(up, dtype=float)
    up = up / np.linalg.norm(up)
    direction = np.asarray(line.direction, dtype=float)
    if project:
        feet = feet - np.outer(feet @ up, up)
        direction = direction - (direction @ up) * up
    ok = np.isfinite(feet).all(axis=1) & (np.linalg.norm(feet, axis=1) >= MIN_PROJECTION)
    if not ok.any():
        raise EmptyInputError("every foot vector has a vanishing horizontal projection")
    feet = feet[ok]
    cross_up = np.cross(np.broadcast_to(direction, feet.shape), feet) @ up
    along = feet @ direction
    if project:
        angles = np.degrees(np.arctan2(cross_up, along))
    else:
        mag = np.degrees(np.arctan2(np.linalg.norm(np.cross(direction, feet), axis=1), along))
        angles = np.copysign(mag, cross_up)
    return float(np.mean(angles)) * _side_sign(side)


def session_progression(
    seq: SkeletonSequence,
    cycles: list[GaitCycle],
    project: bool = True,
    allow_fallback: bool = False,
) -> list[FootProgressionSample]:
    """One FPA sample per cycle.

    The line is fitted to the midpoint of the two ankles over the cycle's
    stance phase (the stance ankle itself barely moves), oriented along the
    midpoint's travel, and compared with the ankle -> toe axis of that side.
    """
    if seq.dims != 3 or not cycles:
        return []
    left = seq.joint(JointId.LEFT_ANKLE)
    right = seq.joint(JointId.RIGHT_ANKLE)
    midpoint = 0.5 * (left + right)
    frame_pos = {int(f): k for k, f in enumerate(seq.frame_index)}
    samples = []
    for cycle in cycles:
        a = frame_pos[cycle.start.frame_index]
        b = frame_pos[cycle.toe_off.frame_index]
        window = slice(a, b + 1)
        mid = midpoint[window]
        mid = mid[np.isfinite(mid).all(axis=1)]
        ankle = seq.joint(JointId.of(cycle.side, "ankle"))[window]
        toe = seq.joint(JointId.of(cycle.side, "toe"))[window]
        feet = toe - ankle
        feet = feet[np.isfinite(feet).all(axis=1)]
        if len(mid) < 2 or len(feet) == 0:
            logger.info("cycle at frame %d (%s): too few joints for FPA", cycle.start.frame_index, cycle.side.value)
            continue
        travel = mid[-1] - mid[0]
        try:
            line = fit_progression_line(mid)
        except DegenerateFitError as exc:
            if not allow_fallback or np.linalg.norm(travel) < MIN_PROJECTION:
                logger.info("cycle at frame %d (%s): %s", cycle.start.frame_index, cycle.side.value, exc)
                continue
            d = travel / np.linalg.norm(travel)
            line = ProgressionLine(np.nan, np.nan, np.nan, np.nan, d)
        line = line.oriented(travel)
        try:
            angle = foot_progression_angle(feet, line, cycle.side, project=project)
        except EmptyInputError as exc:
            logger.info("cycle at frame %d (%s): %s", cycle.start.frame_index, cycle.side.value, exc)
            continue
        samples.append(FootProgressionSample(cycle, cycle.side, angle))
    return samples


def fpa_to_csv(samples: list[FootProgressionSample]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cycle_start_frame", "side", "fpa_deg"])
    for s in samples:
        writer.writerow([s.cycle.start.frame_index, s.side.value, repr(s.angle)])
    return buf.getvalue()
