"""Keypoint stream ingestion.

Parses keypoint JSON (canonical named-joint lines, or flattened positional
arrays as emitted by 2D pose estimators) and CSV into immutable
:class:`SkeletonSequence` values, and provides the cleaning steps applied
before kinematics: axis normalization, gap filling and smoothing.

Internally a sequence is array-backed: positions are ``(frames, joints, dims)``
with NaN marking a missing joint, so downstream code stays vectorized.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    OrderingError,
    ParseError,
    RowLengthError,
    SchemaMismatchError,
)

logger = logging.getLogger(__name__)

DEFAULT_CONFIDENCE_FLOOR = 0.1
DEFAULT_FRAME_RATE = 30.0


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def other(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT


class JointId(str, Enum):
    LEFT_KNEE = "left_knee"
    RIGHT_KNEE = "right_knee"
    LEFT_ANKLE = "left_ankle"
    RIGHT_ANKLE = "right_ankle"
    LEFT_TOE = "left_toe"
    RIGHT_TOE = "right_toe"
    LEFT_HEEL = "left_heel"
    RIGHT_HEEL = "right_heel"
    LEFT_HIP = "left_hip"
    RIGHT_HIP = "right_hip"

    @property
    def side(self) -> Side:
        return Side(self.value.split("_", 1)[0])

    @property
    def landmark(self) -> str:
        return self.value.split("_", 1)[1]

    @property
    def mirrored(self) -> "JointId":
        return JointId.of(self.side.other, self.landmark)

    @classmethod
    def of(cls, side: Side, landmark: str) -> "JointId":
        return cls(f"{Side(side).value}_{landmark}")


KEY_JOINTS: tuple[JointId, ...] = (
    JointId.LEFT_KNEE,
    JointId.RIGHT_KNEE,
    JointId.LEFT_ANKLE,
    JointId.RIGHT_ANKLE,
    JointId.LEFT_TOE,
    JointId.RIGHT_TOE,
)

_AXIS_NAMES = "xyz"


@dataclass(frozen=True)
class AxisConvention:
    """Signed axis permutation mapping raw coordinates to (lateral, vertical, depth).

    ``axes[k] = (index, sign)`` says output axis ``k`` is ``sign * raw[index]``.
    The string form lists the raw source of each output axis, e.g. ``"x,z,-y"``
    takes lateral from +x, vertical from +z and depth from -y.
    """

    axes: tuple[tuple[int, int], ...]

    def __post_init__(self):
        dims = len(self.axes)
        if dims not in (2, 3):
            raise ConfigError(f"axis convention needs 2 or 3 axes, got {dims}")
        indices = sorted(i for i, _ in self.axes)
        if indices != list(range(dims)):
            raise ConfigError(f"axis convention is not invertible: {self}")
        if any(s not in (1, -1) for _, s in self.axes):
            raise ConfigError("axis signs must be +1 or -1")

    @classmethod
    def parse(cls, text: str) -> "AxisConvention":
        parts = [p.strip().lower() for p in text.split(",")]
        axes = []
        for part in parts:
            sign = 1
            if part[:1] in "+-":
                sign = -1 if part[0] == "-" else 1
                part = part[1:]
            if len(part) != 1 or part not in _AXIS_NAMES:
                raise ConfigError(f"bad axis token {part!r} in {text!r}")
            axes.append((_AXIS_NAMES.index(part), sign))
        return cls(tuple(axes))

    @classmethod
    def identity(cls, dims: int) -> "AxisConvention":
        return cls(tuple((i, 1) for i in range(dims)))

    @property
    def dims(self) -> int:
        return len(self.axes)

    @property
    def matrix(self) -> np.ndarray:
        m = np.zeros((self.dims, self.dims))
        for out, (src, sign) in enumerate(self.axes):
            m[out, src] = sign
        return m

    @property
    def determinant(self) -> int:
        return int(round(np.linalg.det(self.matrix)))

    @property
    def is_identity(self) -> bool:
        return self == AxisConvention.identity(self.dims)

    def inverse(self) -> "AxisConvention":
        inv = [None] * self.dims
        for out, (src, sign) in enumerate(self.axes):
            inv[src] = (out, sign)
        return AxisConvention(tuple(inv))

    def __str__(self) -> str:
        return ",".join(("-" if s < 0 else "") + _AXIS_NAMES[i] for i, s in self.axes)


@dataclass(frozen=True)
class SkeletonFrame:
    frame_index: int
    timestamp: float
    positions: Mapping[JointId, tuple[float, ...]]
    confidence: Mapping[JointId, float]


@dataclass(frozen=True, eq=False)
class SkeletonSequence:
    """Time-ordered keypoint frames sharing one dimensionality."""

    joints: tuple[JointId, ...]
    positions: np.ndarray
    confidence: np.ndarray
    times: np.ndarray
    frame_index: np.ndarray
    frame_rate: float
    axes: AxisConvention
    filled: np.ndarray | None = None
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        n = len(self.times)
        if pos.ndim != 3 or pos.shape[:2] != (n, len(self.joints)):
            raise ValueError(f"positions shape {pos.shape} does not match {n} frames x {len(self.joints)} joints")
        if pos.shape[2] not in (2, 3):
            raise ValueError("positions must be 2D or 3D")
        if pos.shape[2] != self.axes.dims:
            raise ConfigError("axis convention dimensionality differs from positions")
        if not self.frame_rate > 0:
            raise ConfigError(f"frame_rate must be positive, got {self.frame_rate}")
        times = np.asarray(self.times, dtype=float)
        if n > 1 and not np.all(np.diff(times) > 0):
            raise OrderingError("timestamps must be strictly increasing")
        arrays = {
            "positions": pos,
            "confidence": np.asarray(self.confidence, dtype=float),
            "times": times,
            "frame_index": np.asarray(self.frame_index, dtype=np.int64),
        }
        if self.filled is not None:
            arrays["filled"] = np.asarray(self.filled, dtype=bool)
        for name, arr in arrays.items():
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dims(self) -> int:
        return self.positions.shape[2]

    @property
    def n_frames(self) -> int:
        return len(self.times)

    def __len__(self) -> int:
        return self.n_frames

    def has_joint(self, joint: JointId) -> bool:
        return joint in self.joints and bool(np.isfinite(self.joint(joint)).all(axis=1).any())

    def joint(self, joint: JointId) -> np.ndarray:
        """``(frames, dims)`` positions of one joint, NaN where missing."""
        if joint not in self.joints:
            return np.full((self.n_frames, self.dims), np.nan)
        return self.positions[:, self.joints.index(joint), :]

    def present(self, joint: JointId) -> np.ndarray:
        return np.isfinite(self.joint(joint)).all(axis=1)

    @property
    def frames(self) -> list[SkeletonFrame]:
        out = []
        for i in range(self.n_frames):
            pos, conf = {}, {}
            for j, jid in enumerate(self.joints):
                p = self.positions[i, j]
                if np.isfinite(p).all():
                    pos[jid] = tuple(float(v) for v in p)
                    conf[jid] = float(self.confidence[i, j])
            out.append(SkeletonFrame(int(self.frame_index[i]), float(self.times[i]), pos, conf))
        return out

    def with_positions(self, positions: np.ndarray, **changes) -> "SkeletonSequence":
        return replace(self, positions=positions, **changes)

    def subset(self, mask: np.ndarray) -> "SkeletonSequence":
        """Frames selected by a boolean mask (frame indices kept)."""
        filled = None if self.filled is None else self.filled[mask]
        return replace(
            self,
            positions=self.positions[mask],
            confidence=self.confidence[mask],
            times=self.times[mask],
            frame_index=self.frame_index[mask],
            filled=filled,
        )

    def mirrored(self) -> "SkeletonSequence":
        """Swap left/right joint labels and reflect the lateral axis."""
        positions = np.array(self.positions)
        positions[..., 0] = -positions[..., 0]
        return replace(self, joints=tuple(j.mirrored for j in self.joints), positions=positions)

    def shifted(self, dt: float) -> "SkeletonSequence":
        return replace(self, times=self.times + dt)


def empty_sequence(dims: int = 3, frame_rate: float = DEFAULT_FRAME_RATE) -> SkeletonSequence:
    return SkeletonSequence(
        joints=(),
        positions=np.zeros((0, 0, dims)),
        confidence=np.zeros((0, 0)),
        times=np.zeros(0),
        frame_index=np.zeros(0, dtype=np.int64),
        frame_rate=frame_rate,
        axes=AxisConvention.identity(dims),
    )


# --------------------------------------------------------------------------- #
# JSON
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class JsonSchemaOptions:
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR
    frame_rate: float | None = None
    dims: int | None = None
    axes: str | None = None
    # positional (flattened triple) import: joint name per slot; names that
    # are not JointId values (nose, neck, ...) are read and discarded
    joint_order: tuple[str, ...] | None = None


def load_joint_order(path) -> JsonSchemaOptions:
    """Read a joint-ordering table ``{"dims": 2, "joints": [...]}``."""
    with open(path, encoding="utf-8") as fh:
        try:
            table = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"joint order file {path}: {exc}") from exc
    if "joints" not in table:
        raise ConfigError(f"joint order file {path} has no 'joints' list")
    return JsonSchemaOptions(
        joint_order=tuple(table["joints"]),
        dims=table.get("dims"),
        frame_rate=table.get("frame_rate"),
        confidence_floor=table.get("confidence_floor", DEFAULT_CONFIDENCE_FLOOR),
        axes=table.get("axes"),
    )


def _iter_json_objects(text: str) -> Iterable[tuple[int, object]]:
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            items = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from exc
        for i, item in enumerate(items):
            yield i + 1, item
        return
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=lineno) from exc


def _positional_values(obj: dict, lineno: int) -> list:
    if "keypoints" in obj:
        return obj["keypoints"]
    people = obj.get("people")
    if people is not None:
        if not people:
            return []
        person = people[0]
        for key in ("pose_keypoints_3d", "pose_keypoints_2d"):
            if key in person:
                return person[key]
    raise SchemaMismatchError("frame has no 'keypoints' or 'people' array", line=lineno)


class _FrameBuilder:
    """Accumulates parsed frames before freezing them into a sequence."""

    def __init__(self, dims: int | None, floor: float):
        self.dims = dims
        self.floor = floor
        self.rows: list[dict[JointId, tuple[list[float], float]]] = []
        self.times: list[float | None] = []
        self.indices: list[int] = []

    def add(self, lineno: int, index: int, t, joints: dict[JointId, Sequence[float]]):
        row = {}
        for jid, values in joints.items():
            if self.dims is None:
                if len(values) not in (3, 4):
                    raise SchemaMismatchError(f"{jid.value}: expected 3 or 4 values, got {len(values)}", line=lineno)
                self.dims = len(values) - 1
            if len(values) != self.dims + 1:
                raise SchemaMismatchError(
                    f"{jid.value}: expected {self.dims + 1} values, got {len(values)}", line=lineno
                )
            try:
                coords = [float(v) for v in values[:-1]]
                conf = float(values[-1])
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{jid.value}: non-numeric value", line=lineno) from exc
            if not 0.0 <= conf <= 1.0:
                raise ParseError(f"{jid.value}: confidence {conf} outside [0, 1]", line=lineno)
            if conf < self.floor or not all(math.isfinite(c) for c in coords):
                continue
            row[jid] = (coords, conf)
        if t is not None:
            try:
                t = float(t)
            except (TypeError, ValueError) as exc:
                raise ParseError(f"bad timestamp {t!r}", line=lineno) from exc
            if self.times and self.times[-1] is not None and not t > self.times[-1]:
                raise OrderingError(f"timestamp {t} does not increase", line=lineno)
        self.rows.append(row)
        self.times.append(t)
        self.indices.append(index)

    def build(self, frame_rate: float | None, axes: str | None, metadata=None) -> SkeletonSequence:
        dims = self.dims or 3
        present = {jid for row in self.rows for jid in row}
        joints = tuple(j for j in JointId if j in present)
        n = len(self.rows)
        positions = np.full((n, len(joints), dims), np.nan)
        confidence = np.full((n, len(joints)), np.nan)
        col = {j: k for k, j in enumerate(joints)}
        for i, row in enumerate(self.rows):
            for jid, (coords, conf) in row.items():
                positions[i, col[jid]] = coords
                confidence[i, col[jid]] = conf
        known = [t for t in self.times if t is not None]
        if frame_rate is None:
            if len(known) >= 2 and len(known) == n:
                frame_rate = 1.0 / float(np.median(np.diff(known)))
            else:
                frame_rate = DEFAULT_FRAME_RATE
        if len(known) not in (0, n):
            raise ParseError("timestamps present on some frames but not others")
        times = np.array(known if known else [i / frame_rate for i in self.indices], dtype=float)
        convention = AxisConvention.parse(axes) if axes else AxisConvention.identity(dims)
        return SkeletonSequence(
            joints=joints,
            positions=positions,
            confidence=confidence,
            times=times,
            frame_index=np.array(self.indices, dtype=np.int64),
            frame_rate=float(frame_rate),
            axes=convention,
            metadata=dict(metadata or {}),
        )


def parse_keypoint_json(data: bytes | str, options: JsonSchemaOptions | None = None) -> SkeletonSequence:
    """Parse line-delimited (or array) keypoint JSON.

    Canonical frames look like ``{"frame": 0, "t": 0.0, "joints": {"left_ankle":
    [x, y, z, c], ...}}``; an optional leading ``{"meta": {...}}`` object carries
    ``dims``, ``frame_rate`` and ``axes``. With ``options.joint_order`` set,
    frames instead hold a flat ``keypoints`` array (or OpenPose ``people``).
    """
    options = options or JsonSchemaOptions()
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    meta: dict = {}
    builder = _FrameBuilder(options.dims, options.confidence_floor)
    order = options.joint_order
    if order is not None:
        known_names = {j.value for j in JointId}
        slots = [JointId(name) if name in known_names else None for name in order]

    for lineno, obj in _iter_json_objects(text):
        if not isinstance(obj, dict):
            raise ParseError("frame is not a JSON object", line=lineno)
        if "meta" in obj:
            if builder.rows:
                raise ParseError("meta object after first frame", line=lineno)
            meta = dict(obj["meta"])
            if builder.dims is None and meta.get("dims") is not None:
                builder.dims = int(meta["dims"])
            continue
        index = obj.get("frame", len(builder.rows))
        if not isinstance(index, int):
            raise ParseError(f"bad frame index {index!r}", line=lineno)
        if order is None:
            raw = obj.get("joints")
            if not isinstance(raw, dict):
                raise SchemaMismatchError("frame has no 'joints' object", line=lineno)
            joints = {}
            for name, values in raw.items():
                try:
                    jid = JointId(name)
                except ValueError:
                    logger.debug("line %d: ignoring unknown joint %r", lineno, name)
                    continue
                if not isinstance(values, list):
                    raise SchemaMismatchError(f"{name}: expected a list", line=lineno)
                joints[jid] = values
        else:
            flat = _positional_values(obj, lineno)
            if builder.dims is None:
                raise ConfigError("positional import needs dims in the joint-order table")
            width = builder.dims + 1
            if flat and len(flat) != width * len(slots):
                raise SchemaMismatchError(
                    f"{len(flat)} values for {len(slots)} joints of width {width}", line=lineno
                )
            joints = {}
            for k, jid in enumerate(slots):
                if jid is not None and flat:
                    joints[jid] = flat[k * width:(k + 1) * width]
        builder.add(lineno, index, obj.get("t"), joints)

    frame_rate = options.frame_rate or meta.get("frame_rate")
    axes = options.axes or meta.get("axes")
    extra = {k: v for k, v in meta.items() if k not in ("dims", "frame_rate", "axes")}
    return builder.build(frame_rate, axes, extra)


def _num(v: float) -> float:
    return float(v)


def frame_to_json(seq: SkeletonSequence, i: int) -> str:
    joints = {}
    for j, jid in enumerate(seq.joints):
        p = seq.positions[i, j]
        if np.isfinite(p).all():
            joints[jid.value] = [_num(v) for v in p] + [_num(seq.confidence[i, j])]
    obj = {"frame": int(seq.frame_index[i]), "t": _num(seq.times[i]), "joints": joints}
    return json.dumps(obj, separators=(",", ":"))


def meta_to_json(seq: SkeletonSequence) -> str:
    meta = {"dims": seq.dims, "frame_rate": _num(seq.frame_rate), "axes": str(seq.axes)}
    meta.update(seq.metadata)
    return json.dumps({"meta": meta}, separators=(",", ":"), sort_keys=False)


def serialize_json(seq: SkeletonSequence) -> bytes:
    """Canonical form: a meta line followed by one frame object per line."""
    lines = [meta_to_json(seq)]
    lines.extend(frame_to_json(seq, i) for i in range(seq.n_frames))
    return ("\n".join(lines) + "\n").encode("utf-8")


# --------------------------------------------------------------------------- #
# CSV
# --------------------------------------------------------------------------- #


def default_column_map(header: Sequence[str]) -> dict[str, tuple[JointId, str]]:
    """Bind ``<joint>_<axis>`` / ``<joint>_conf`` header names to joints."""
    mapping = {}
    for name in header:
        stem, _, axis = name.rpartition("_")
        if axis in ("x", "y", "z", "conf"):
            try:
                mapping[name] = (JointId(stem), axis)
            except ValueError:
                continue
    return mapping


def parse_keypoint_csv(
    data: bytes | str,
    column_map: Mapping[str, tuple[JointId, str]] | None = None,
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR,
    frame_rate: float | None = None,
    axes: str | None = None,
) -> SkeletonSequence:
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("CSV has no header row", line=1) from None
    header = [h.strip() for h in header]
    if column_map is None:
        column_map = default_column_map(header)
    missing = [c for c in column_map if c not in header]
    if missing:
        raise ConfigError(f"mapped columns absent from header: {missing}")
    if not column_map:
        raise ConfigError("no CSV column is mapped to a joint")
    col_of = {name: k for k, name in enumerate(header)}
    by_joint: dict[JointId, dict[str, int]] = {}
    for name, (jid, axis) in column_map.items():
        by_joint.setdefault(JointId(jid), {})[axis] = col_of[name]
    dims = 3 if any("z" in axes_ for axes_ in by_joint.values()) else 2
    coord_axes = "xyz"[:dims]
    for jid, cols in by_joint.items():
        lacking = [a for a in coord_axes if a not in cols]
        if lacking:
            raise ConfigError(f"{jid.value}: no column for axis {lacking}")

    builder = _FrameBuilder(dims, confidence_floor)
    frame_col = col_of.get("frame")
    t_col = col_of.get("t")
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise RowLengthError(f"expected {len(header)} cells, got {len(row)}", line=lineno)
        index = len(builder.rows)
        if frame_col is not None and row[frame_col].strip():
            try:
                index = int(row[frame_col])
            except ValueError as exc:
                raise ParseError(f"bad frame index {row[frame_col]!r}", line=lineno) from exc
        t = row[t_col].strip() if t_col is not None else ""
        joints = {}
        for jid, cols in by_joint.items():
            cells = [row[cols[a]].strip() for a in coord_axes]
            if any(not c for c in cells):
                continue
            conf = row[cols["conf"]].strip() if "conf" in cols else "1.0"
            if not conf:
                continue
            joints[jid] = cells + [conf]
        builder.add(lineno, index, t if t else None, joints)
    return builder.build(frame_rate, axes)


def serialize_csv(seq: SkeletonSequence) -> bytes:
    coord_axes = "xyz"[: seq.dims]
    header = ["frame", "t"]
    for jid in seq.joints:
        header += [f"{jid.value}_{a}" for a in coord_axes] + [f"{jid.value}_conf"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for i in range(seq.n_frames):
        row = [str(int(seq.frame_index[i])), repr(float(seq.times[i]))]
        for j in range(len(seq.joints)):
            p = seq.positions[i, j]
            if np.isfinite(p).all():
                row += [repr(float(v)) for v in p] + [repr(float(seq.confidence[i, j]))]
            else:
                row += [""] * (seq.dims + 1)
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")


def read_sequence(path, options: JsonSchemaOptions | None = None) -> SkeletonSequence:
    """Load a keypoint file, choosing the parser by extension."""
    with open(path, "rb") as fh:
        data = fh.read()
    if str(path).lower().endswith(".csv"):
        options = options or JsonSchemaOptions()
        return parse_keypoint_csv(
            data,
            confidence_floor=options.confidence_floor,
            frame_rate=options.frame_rate,
            axes=options.axes,
        )
    return parse_keypoint_json(data, options)


# --------------------------------------------------------------------------- #
# Cleaning
# --------------------------------------------------------------------------- #


def normalize_axes(seq: SkeletonSequence, convention: AxisConvention | str | None = None) -> SkeletonSequence:
    """Map raw coordinates onto (lateral, vertical-up, depth).

    With ``convention=None`` the sequence's own stored convention is applied.
    The result is tagged with the identity convention.
    """
    if convention is None:
        convention = seq.axes
    elif isinstance(convention, str):
        convention = AxisConvention.parse(convention)
    if convention.dims != seq.dims:
        raise ConfigError(f"{convention.dims}-axis convention applied to {seq.dims}D sequence")
    index = [src for src, _ in convention.axes]
    signs = np.array([sign for _, sign in convention.axes], dtype=float)
    positions = seq.positions[..., index] * signs
    return seq.with_positions(positions, axes=AxisConvention.identity(seq.dims))


def fill_gaps(seq: SkeletonSequence, max_gap_frames: int) -> SkeletonSequence:
    """Linearly interpolate interior gaps of at most ``max_gap_frames`` frames."""
    if max_gap_frames < 0:
        raise ConfigError("max_gap_frames must be >= 0")
    positions = np.array(seq.positions)
    confidence = np.array(seq.confidence)
    filled = np.zeros(positions.shape[:2], dtype=bool) if seq.filled is None else np.array(seq.filled)
    t = seq.times
    for j in range(len(seq.joints)):
        present = np.isfinite(positions[:, j]).all(axis=1)
        idx = np.flatnonzero(present)
        if len(idx) < 2:
            continue
        for a, b in zip(idx[:-1], idx[1:]):
            gap = b - a - 1
            if gap == 0 or gap > max_gap_frames:
                continue
            w = ((t[a + 1:b] - t[a]) / (t[b] - t[a]))[:, None]
            positions[a + 1:b, j] = positions[a, j] + w * (positions[b, j] - positions[a, j])
            confidence[a + 1:b, j] = np.minimum(confidence[a, j], confidence[b, j])
            filled[a + 1:b, j] = True
    return replace(seq, positions=positions, confidence=confidence, filled=filled)


def smooth(seq: SkeletonSequence, window_frames: int) -> SkeletonSequence:
    """Centered moving average over the present samples of each coordinate.

    Missing samples stay missing and are excluded from their neighbours'
    averages; the window is truncated at the sequence ends.
    """
    if window_frames < 1 or window_frames % 2 == 0:
        raise ConfigError(f"smoothing window must be odd and >= 1, got {window_frames}")
    if window_frames == 1 or seq.n_frames == 0:
        return seq
    pos = seq.positions
    n = seq.n_frames
    half = window_frames // 2
    present = np.isfinite(pos)
    # averaging deviations from the centre sample keeps constant signals exact
    total = np.zeros_like(pos)
    count = np.zeros(pos.shape)
    for k in range(-half, half + 1):
        lo, hi = max(0, -k), min(n, n - k)
        src = pos[lo + k:hi + k]
        ok = present[lo + k:hi + k] & present[lo:hi]
        total[lo:hi] += np.where(ok, src - np.where(ok, pos[lo:hi], 0.0), 0.0)
        count[lo:hi] += ok
    out = np.where(present, pos + total / np.maximum(count, 1), np.nan)
    return seq.with_positions(out)
