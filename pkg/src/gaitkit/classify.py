"""Gait features and the four-way walking-pattern classifier."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Protocol

import numpy as np

from .errors import InsufficientDataError, InvalidFeatureError
from .events import GaitEvent, segment_cycles
from .ingest import Side
from .kinematics import AngleSeries
from .progression import FootProgressionSample

MIN_CYCLES = 2


class ClassLabel(str, Enum):
    NORMAL = "normal"
    SUPINATION = "supination"
    PRONATION = "pronation"
    LIMP = "limp"


@dataclass(frozen=True)
class GaitFeatures:
    median_inversion_eversion: dict
    median_fpa: dict
    stance_fraction: dict
    stance_asymmetry: float
    cadence: float

    @property
    def mean_inversion_eversion(self) -> float:
        return 0.5 * (self.median_inversion_eversion[Side.LEFT] + self.median_inversion_eversion[Side.RIGHT])

    @property
    def mean_fpa(self) -> float:
        return 0.5 * (self.median_fpa[Side.LEFT] + self.median_fpa[Side.RIGHT])

    def values(self) -> list[float]:
        out = [self.stance_asymmetry, self.cadence]
        for d in (self.median_inversion_eversion, self.median_fpa, self.stance_fraction):
            out.extend(d[s] for s in Side)
        return out

    def to_dict(self) -> dict:
        def per_side(d):
            return {s.value: float(d[s]) for s in Side}

        return {
            "median_inversion_eversion": per_side(self.median_inversion_eversion),
            "median_fpa": per_side(self.median_fpa),
            "stance_fraction": per_side(self.stance_fraction),
            "stance_asymmetry": float(self.stance_asymmetry),
            "cadence": float(self.cadence),
        }


def extract_features(
    angles: AngleSeries,
    events: dict[Side, list[GaitEvent]],
    fpa_samples: list[FootProgressionSample],
) -> GaitFeatures:
    ie, fpa, stance, durations = {}, {}, {}, []
    for side in Side:
        cycles = segment_cycles(events.get(side, []))
        if len(cycles) < MIN_CYCLES:
            raise InsufficientDataError(f"{side.value}: {len(cycles)} gait cycles, need {MIN_CYCLES}")
        stance[side] = float(np.mean([c.stance_fraction for c in cycles]))
        durations.extend(c.duration for c in cycles)
        col = angles.column("inversion_eversion", side)
        col = col[np.isfinite(col)]
        if len(col) == 0:
            raise InsufficientDataError(f"{side.value}: no inversion/eversion samples")
        ie[side] = float(np.median(col))
        side_fpa = [s.angle for s in fpa_samples if s.side is side]
        if not side_fpa:
            raise InsufficientDataError(f"{side.value}: no foot progression samples")
        fpa[side] = float(np.median(side_fpa))
    # one cycle spans two steps
    cadence = 120.0 / float(np.mean(durations))
    return GaitFeatures(ie, fpa, stance, abs(stance[Side.LEFT] - stance[Side.RIGHT]), cadence)


@dataclass(frozen=True)
class Thresholds:
    t_limp: float = 0.08
    t_ie: float = 5.0
    t_out: float = 15.0
    t_in: float = -5.0
    # logistic temperature per feature family
    limp_scale: float = 0.02
    angle_scale: float = 2.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Classification:
    label: ClassLabel
    scores: dict

    def to_dict(self) -> dict:
        return {"label": self.label.value, "scores": {k.value: float(v) for k, v in self.scores.items()}}


class Classifier(Protocol):
    def __call__(self, features: GaitFeatures, thresholds: Thresholds) -> Classification: ...


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def classify(features: GaitFeatures, thresholds: Thresholds | None = None) -> Classification:
    """Rule cascade Limp > Pronation > Supination > Normal.

    Each rule's margin is its signed distance past the threshold (positive =
    fires). A class's score is the logistic of its margin capped by the
    negated margins of every rule ranked above it, so only the cascade's
    label can have a positive capped margin and it always holds the largest
    score (tied when a feature sits exactly on a threshold).
    """
    th = thresholds or Thresholds()
    if not all(math.isfinite(v) for v in features.values()):
        raise InvalidFeatureError("non-finite gait feature")
    ie, fpa = features.mean_inversion_eversion, features.mean_fpa
    z_limp = (features.stance_asymmetry - th.t_limp) / th.limp_scale
    z_pron = max((-ie - th.t_ie) / th.angle_scale, (fpa - th.t_out) / th.angle_scale)
    z_sup = max((ie - th.t_ie) / th.angle_scale, (th.t_in - fpa) / th.angle_scale)

    if z_limp > 0:
        label = ClassLabel.LIMP
    elif z_pron > 0:
        label = ClassLabel.PRONATION
    elif z_sup > 0:
        label = ClassLabel.SUPINATION
    else:
        label = ClassLabel.NORMAL

    margins = {
        ClassLabel.LIMP: z_limp,
        ClassLabel.PRONATION: min(z_pron, -z_limp),
        ClassLabel.SUPINATION: min(z_sup, -z_limp, -z_pron),
        ClassLabel.NORMAL: min(-z_limp, -z_pron, -z_sup),
    }
    raw = {k: _logistic(v) for k, v in margins.items()}
    total = sum(raw.values())
    scores = {k: v / total for k, v in raw.items()}
    return Classification(label, scores)
