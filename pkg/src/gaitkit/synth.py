"""Parametric synthetic gait sessions with analytically known ground truth.

Each foot is a rigid ankle->toe segment. During stance the toe rests on the
ground and the foot keeps its pitch (``inversion_bias``) and yaw
(``toe_out``). During swing the toe travels one stride along a smooth arc
while the pitch oscillates symmetrically around its stance value. The shank
tilts sinusoidally, phase-locked to the gait cycle. The subject stands still
before and after walking, and jumps (a vertical parabola applied to every
joint) can be injected at given times for clock synchronization.

Angles are recorded from the generating pitch/yaw/tilt, not from the emitted
keypoints, so the truth is independent of the kinematics code it checks.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .classify import ClassLabel
from .errors import ConfigError
from .events import EventKind, GaitEvent
from .ingest import AxisConvention, JointId, Side, SkeletonSequence
from .kinematics import PARAMETERS, AngleSeries
from .progression import ProgressionLine
from .sync import TimeMapping

UP = np.array([0.0, 1.0, 0.0])
SYNTH_JOINTS = (
    JointId.LEFT_KNEE,
    JointId.RIGHT_KNEE,
    JointId.LEFT_ANKLE,
    JointId.RIGHT_ANKLE,
    JointId.LEFT_TOE,
    JointId.RIGHT_TOE,
)


@dataclass(frozen=True)
class SynthParams:
    frame_rate: float = 30.0
    n_strides: int = 10
    stride_length: float = 1.3
    cadence: float = 110.0  # steps / min
    shank_length: float = 0.43
    foot_length: float = 0.20
    # per side: (left, right)
    toe_out: tuple[float, float] = (7.0, 7.0)
    inversion_bias: tuple[float, float] = (0.0, 0.0)
    stance_fraction: tuple[float, float] = (0.62, 0.62)
    step_width: float = 0.16
    swing_height: float = 0.10
    swing_pitch: float = 10.0
    shank_tilt: float = 5.0
    shank_swing: float = 15.0
    toe_height: float = 0.02
    noise_sigma: float = 0.0
    angle_noise: float = 0.0
    jump_times: tuple[float, ...] | None = None
    jump_height: float = 0.25
    jump_duration: float = 0.45
    lead_in: float = 2.0
    lead_out: float = 2.0
    walking_direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.5)
    seed: int = 0
    condition: str | None = None

    def __post_init__(self):
        positive = ("frame_rate", "stride_length", "cadence", "shank_length", "foot_length", "n_strides")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("step_width", "swing_height", "noise_sigma", "angle_noise", "jump_height",
                     "jump_duration", "lead_in", "lead_out", "toe_height"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        for name in ("toe_out", "inversion_bias", "stance_fraction"):
            value = tuple(float(v) for v in getattr(self, name))
            if len(value) != 2:
                raise ConfigError(f"{name} needs a (left, right) pair")
            object.__setattr__(self, name, value)
        if not all(0 < s < 1 for s in self.stance_fraction):
            raise ConfigError("stance_fraction must lie in (0, 1)")
        if abs(self.stance_fraction[0] - self.stance_fraction[1]) >= 0.5:
            raise ConfigError("stance fractions may differ by less than 0.5")
        if any(abs(v) >= 60 for v in self.toe_out + self.inversion_bias):
            raise ConfigError("toe_out and inversion_bias must be below 60 degrees")
        d = np.asarray(self.walking_direction, dtype=float)
        if d.shape != (3,) or abs(d[1]) > 1e-12 or np.hypot(d[0], d[2]) == 0:
            raise ConfigError("walking_direction must be a nonzero horizontal 3-vector")
        if abs(d[2]) < 0.5 * np.hypot(d[0], d[2]):
            raise ConfigError("walking_direction must lie within 60 degrees of the depth axis")
        if self.jump_times is not None:
            object.__setattr__(self, "jump_times", tuple(float(t) for t in self.jump_times))
        if self.condition is not None and self.condition not in CONDITIONS:
            raise ConfigError(f"unknown condition {self.condition!r}")

    @property
    def period(self) -> float:
        """Stride (gait cycle) duration in seconds."""
        return 120.0 / self.cadence

    @property
    def forward(self) -> np.ndarray:
        d = np.asarray(self.walking_direction, dtype=float)
        return d / np.linalg.norm(d)

    def first_heel_strike(self, side: Side) -> float:
        """Virtual heel strike preceding the first toe off."""
        h0 = self.lead_in - self.stance_fraction[0] * self.period
        return h0 if Side(side) is Side.LEFT else h0 + 0.5 * self.period

    @property
    def walk_end(self) -> float:
        return self.first_heel_strike(Side.RIGHT) + self.n_strides * self.period

    @property
    def duration(self) -> float:
        return self.walk_end + self.lead_out

    @property
    def n_frames(self) -> int:
        return int(math.floor(self.duration * self.frame_rate + 1e-9)) + 1

    @property
    def effective_jump_times(self) -> tuple[float, ...]:
        if self.jump_times is not None:
            return self.jump_times
        return (0.5 * self.lead_in, self.walk_end + 0.5 * self.lead_out)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SynthParams":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown synth parameters: {sorted(unknown)}")
        data = dict(data)
        if data.get("condition"):
            base = CONDITIONS[data["condition"]]
            data = {**base, **data}
        for key in ("toe_out", "inversion_bias", "stance_fraction", "walking_direction", "origin", "jump_times"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)

    @classmethod
    def for_condition(cls, condition: str, **overrides) -> "SynthParams":
        if condition not in CONDITIONS:
            raise ConfigError(f"unknown condition {condition!r}")
        return cls(**{**CONDITIONS[condition], "condition": condition, **overrides})


CONDITIONS: dict[str, dict] = {
    "normal": {"toe_out": (7.0, 7.0), "inversion_bias": (0.0, 0.0), "stance_fraction": (0.62, 0.62)},
    "supination": {"toe_out": (-10.0, -10.0), "inversion_bias": (10.0, 10.0), "stance_fraction": (0.62, 0.62)},
    "pronation": {"toe_out": (25.0, 25.0), "inversion_bias": (-10.0, -10.0), "stance_fraction": (0.62, 0.62)},
    "limp": {"toe_out": (7.0, 7.0), "inversion_bias": (0.0, 0.0), "stance_fraction": (0.70, 0.55)},
}


@dataclass(frozen=True, eq=False)
class SynthTruth:
    angles: AngleSeries
    events: dict
    progression_line: ProgressionLine
    fpa: dict
    label: ClassLabel | None
    stance_fraction: dict
    jump_times: tuple[float, ...]
    mapping: TimeMapping | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        line = self.progression_line
        return {
            "label": None if self.label is None else self.label.value,
            "fpa_deg": {s.value: v for s, v in self.fpa.items()},
            "stance_fraction": {s.value: v for s, v in self.stance_fraction.items()},
            "jump_times_s": list(self.jump_times),
            "progression_line": {"m": line.m, "n": line.n, "x0": line.x0, "y0": line.y0},
            "events": [
                {"kind": e.kind.value, "side": e.side.value, "frame": e.frame_index, "t": e.timestamp}
                for side in Side
                for e in self.events[side]
            ],
            "mapping": None if self.mapping is None else self.mapping.to_dict(),
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _foot_direction(forward, outward, yaw_deg, pitch_rad):
    yaw = math.radians(yaw_deg)
    horiz = math.cos(yaw) * forward + math.sin(yaw) * outward
    return np.cos(pitch_rad)[:, None] * horiz - np.sin(pitch_rad)[:, None] * UP


def _side_state(p: SynthParams, side: Side, t: np.ndarray):
    """Stance index (float along the stride axis), swing flags and phases."""
    k_side = 0 if side is Side.LEFT else 1
    s = p.stance_fraction[k_side]
    T = p.period
    h0 = p.first_heel_strike(side)
    N = p.n_strides
    rel = (t - h0) / T
    k = np.clip(np.floor(rel), 0, N - 1)
    u = rel - k  # fraction of the current cycle
    swing = (u > s) & (t < h0 + N * T) & (rel > s)
    phi = np.where(swing, (u - s) / (1 - s), 0.0)
    stance_k = np.where(rel <= s, 0.0, np.where(t >= h0 + N * T, float(N), k))
    stance_k = np.where(swing, k, stance_k)
    cycle_phase = np.clip(rel, s, float(N))
    return stance_k, swing, phi, cycle_phase


def _pose(p: SynthParams, t: np.ndarray, pitch_noise: dict | None = None):
    """Noise-free joint positions and generating angles at times ``t``."""
    f = p.forward
    left_dir = np.cross(UP, f)
    origin = np.asarray(p.origin, dtype=float)
    positions = {}
    angles = {}
    for side in Side:
        i = 0 if side is Side.LEFT else 1
        outward = left_dir if side is Side.LEFT else -left_dir
        bias = math.radians(p.inversion_bias[i])
        stance_k, swing, phi, cycle_phase = _side_state(p, side, t)
        pitch = bias + np.where(
            swing, math.radians(p.swing_pitch) * np.sin(2 * np.pi * phi) * np.sin(np.pi * phi), 0.0
        )
        progress = np.where(swing, 0.5 * (1 - np.cos(np.pi * phi)), 0.0)
        along = (stance_k + progress + 0.5 * i) * p.stride_length
        yaw = math.radians(p.toe_out[i])
        rest_dir = math.cos(yaw) * f + math.sin(yaw) * outward
        toe = (
            origin
            + 0.5 * p.step_width * outward
            + p.foot_length * math.cos(bias) * rest_dir
            + along[:, None] * f
        )
        toe[:, 1] = p.toe_height + np.where(swing, p.swing_height * np.sin(np.pi * phi), 0.0)
        emitted_pitch = pitch if pitch_noise is None else pitch + pitch_noise[side]
        ankle = toe - p.foot_length * _foot_direction(f, outward, p.toe_out[i], emitted_pitch)
        tilt = np.radians(p.shank_tilt + p.shank_swing * np.sin(2 * np.pi * cycle_phase))
        knee = ankle + p.shank_length * (np.cos(tilt)[:, None] * UP + np.sin(tilt)[:, None] * f)
        positions[JointId.of(side, "knee")] = knee
        positions[JointId.of(side, "ankle")] = ankle
        positions[JointId.of(side, "toe")] = toe

        cos_yaw = math.cos(yaw)
        inv = np.degrees(pitch)
        dorsi = -np.degrees(np.arcsin(np.clip(np.cos(pitch) * cos_yaw, -1, 1)))
        cos_ankle = np.cos(pitch) * cos_yaw * np.sin(tilt) - np.sin(pitch) * np.cos(tilt)
        ankle_deg = np.degrees(np.arccos(np.clip(cos_ankle, -1, 1)))
        angles[side] = np.column_stack([inv, dorsi, ankle_deg])
    return positions, angles


def truth_angles(params: SynthParams, t) -> dict:
    """Generating angles ``{side: (N, 3)}`` at arbitrary physical times."""
    return _pose(params, np.atleast_1d(np.asarray(t, dtype=float)))[1]


def _jump_offset(p: SynthParams, t: np.ndarray) -> np.ndarray:
    offset = np.zeros_like(t)
    half = 0.5 * p.jump_duration
    if half == 0:
        return offset
    for tj in p.effective_jump_times:
        x = (t - tj) / half
        offset += np.where(np.abs(x) < 1, p.jump_height * (1 - x * x), 0.0)
    return offset


def _events(p: SynthParams) -> dict[Side, list[GaitEvent]]:
    out = {}
    T = p.period
    for side in Side:
        s = p.stance_fraction[0 if side is Side.LEFT else 1]
        h0 = p.first_heel_strike(side)
        evs = []
        for k in range(p.n_strides):
            to = h0 + (k + s) * T
            hs = h0 + (k + 1) * T
            evs.append(GaitEvent(EventKind.TOE_OFF, side, int(round(to * p.frame_rate)), to))
            evs.append(GaitEvent(EventKind.HEEL_STRIKE, side, int(round(hs * p.frame_rate)), hs))
        out[side] = evs
    return out


def _sequence(p: SynthParams, times: np.ndarray, frame_index: np.ndarray, noise_sigma: float,
              angle_noise: float, rng: np.random.Generator):
    pitch_noise = None
    if angle_noise > 0:
        pitch_noise = {s: np.radians(rng.normal(0.0, angle_noise, len(times))) for s in Side}
    positions, angles = _pose(p, times, pitch_noise)
    arr = np.stack([positions[j] for j in SYNTH_JOINTS], axis=1)
    arr[:, :, 1] += _jump_offset(p, times)[:, None]
    if noise_sigma > 0:
        arr = arr + rng.normal(0.0, noise_sigma, arr.shape)
    seq = SkeletonSequence(
        joints=SYNTH_JOINTS,
        positions=arr,
        confidence=np.ones(arr.shape[:2]),
        times=times,
        frame_index=frame_index,
        frame_rate=p.frame_rate,
        axes=AxisConvention.identity(3),
    )
    return seq, angles


def _truth(p: SynthParams, times, frame_index, angles, mapping=None) -> SynthTruth:
    f = p.forward
    origin = np.asarray(p.origin, dtype=float)
    m = f[0] / f[2]
    standing_height = p.toe_height + 0.5 * p.foot_length * sum(math.sin(math.radians(b)) for b in p.inversion_bias)
    line = ProgressionLine(m, 0.0, origin[0] - m * origin[2], standing_height, f.copy())
    series = AngleSeries(frame_index=np.array(frame_index), times=np.array(times), values=angles, dims=3)
    label = ClassLabel(p.condition) if p.condition else None
    return SynthTruth(
        angles=series,
        events=_events(p),
        progression_line=line,
        fpa={Side.LEFT: p.toe_out[0], Side.RIGHT: p.toe_out[1]},
        label=label,
        stance_fraction={Side.LEFT: p.stance_fraction[0], Side.RIGHT: p.stance_fraction[1]},
        jump_times=p.effective_jump_times,
        mapping=mapping,
    )


def generate(params: SynthParams) -> tuple[SkeletonSequence, SynthTruth]:
    """One session as seen by the estimating camera, plus its ground truth."""
    p = params
    rng = np.random.default_rng(p.seed)
    frame_index = np.arange(p.n_frames)
    times = frame_index / p.frame_rate
    seq, angles = _sequence(p, times, frame_index, p.noise_sigma, p.angle_noise, rng)
    truth = _truth(p, times, frame_index, angles)
    return seq, truth


def generate_pair(
    params: SynthParams,
    offset: float = 0.0,
    rate: float = 1.0,
    reference_noise: float = 0.0,
) -> tuple[SkeletonSequence, SkeletonSequence, SynthTruth]:
    """Estimate stream plus a reference stream on its own clock.

    The reference clock reads ``rate * t + offset`` at physical time ``t``
    (the estimate clock reads ``t``). Reference frames sit on its own frame
    grid and cover the same physical span. The reference is free of angle
    noise; ``reference_noise`` adds keypoint noise to it.
    """
    est, truth = generate(params)
    p = params
    rng = np.random.default_rng(p.seed + 1_000_003)
    t_start, t_end = rate * 0.0 + offset, rate * p.duration + offset
    j = np.arange(math.ceil(t_start * p.frame_rate - 1e-9), math.floor(t_end * p.frame_rate + 1e-9) + 1)
    ref_times = j / p.frame_rate
    physical = (ref_times - offset) / rate
    ref, ref_angles = _sequence(p, physical, j - j[0], reference_noise, 0.0, rng)
    ref = replace(ref, times=ref_times)
    mapping = TimeMapping(offset=offset, rate=rate)
    truth = replace(truth, mapping=mapping, extra={"reference_angles": AngleSeries(
        frame_index=j - j[0], times=ref_times, values=ref_angles, dims=3)})
    return est, ref, truth


def condition_suite(per_class: int = 10, seed: int = 0, **overrides) -> list[SynthParams]:
    """``4 * per_class`` sessions, jittered within each class."""
    rng = np.random.default_rng(seed)
    sessions = []
    for condition in CONDITIONS:
        base = CONDITIONS[condition]
        for k in range(per_class):
            jitter = rng.uniform(-1, 1, size=5)
            toe = base["toe_out"][0] + 2.0 * jitter[0]
            bias = base["inversion_bias"][0] + 2.0 * jitter[1]
            sl, sr = base["stance_fraction"]
            ds = 0.01 * jitter[2]
            sessions.append(
                SynthParams(
                    condition=condition,
                    toe_out=(toe, toe),
                    inversion_bias=(bias, bias),
                    stance_fraction=(sl + ds, sr + ds),
                    cadence=110.0 + 8.0 * jitter[3],
                    stride_length=1.3 + 0.1 * jitter[4],
                    seed=seed * 1000 + len(sessions),
                    **overrides,
                )
            )
    return sessions


PARAMETER_NAMES = PARAMETERS
