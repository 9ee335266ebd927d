"""Ankle kinematics and gait pattern analysis from skeletal keypoints."""

from .errors import GaitkitError
from .ingest import JointId, Side, SkeletonSequence, read_sequence
from .kinematics import angle_between, angle_series
from .synth import SynthParams, generate

__all__ = [
    "GaitkitError",
    "JointId",
    "Side",
    "SkeletonSequence",
    "SynthParams",
    "angle_between",
    "angle_series",
    "generate",
    "read_sequence",
]

__version__ = "0.1.0"
