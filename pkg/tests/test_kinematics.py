import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from gaitkit.errors import DegenerateGeometryError
from gaitkit.ingest import JointId, Side, SkeletonFrame
from gaitkit.kinematics import (
    LinkVectors,
    angle_between,
    angle_series,
    ankle_angle,
    dorsiflexion_plantarflexion,
    inversion_eversion,
    link_vectors,
    walking_direction,
)
from gaitkit.synth import SynthParams, generate
from oracles import angle_deg_mp

UP = np.array([0.0, 1.0, 0.0])
vec = st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=3).map(np.array)


def _link(foot, shank=(0.0, -1.0, 0.0)):
    return LinkVectors(shank=np.asarray(shank, float), foot=np.asarray(foot, float), side=Side.LEFT, frame_index=0)


def _frame(knee, ankle, toe, side=Side.LEFT):
    ids = [JointId.of(side, lm) for lm in ("knee", "ankle", "toe")]
    return SkeletonFrame(0, 0.0, dict(zip(ids, (knee, ankle, toe))), {i: 1.0 for i in ids})


class TestLinkVectors:
    def test_direct_subtraction(self):
        link = link_vectors(_frame((0, 1, 0), (0, 0, 0), (0, 0, 0.2)), Side.LEFT)
        np.testing.assert_array_equal(link.shank, [0, -1, 0])
        np.testing.assert_array_equal(link.foot, [0, 0, -0.2])

    def test_knee_on_ankle_is_degenerate(self):
        with pytest.raises(DegenerateGeometryError):
            link_vectors(_frame((0, 0, 0), (0, 0, 0), (0, 0, 0.2)), Side.LEFT)

    def test_foot_norm_is_ankle_toe_distance(self, rng):
        for _ in range(20):
            knee, ankle, toe = rng.normal(size=(3, 3))
            link = link_vectors(_frame(knee, ankle, toe, Side.RIGHT), Side.RIGHT)
            assert np.linalg.norm(link.foot) == pytest.approx(math.dist(ankle, toe), abs=1e-12)


class TestAngleBetween:
    def test_orthogonal(self):
        assert angle_between((1, 0, 0), (0, 1, 0)) == 90.0

    def test_identical(self):
        assert angle_between((1, 0, 0), (1, 0, 0)) == 0.0

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            angle_between((0, 0, 0), (1, 0, 0))

    def test_extended_precision_oracle(self, rng):
        for _ in range(200):
            u, v = rng.normal(size=(2, 3)) * rng.uniform(1e-3, 1e3, size=(2, 1))
            assert abs(angle_between(u, v) - angle_deg_mp(u, v)) < 1e-9

    def test_near_parallel_stays_in_range(self):
        u = np.array([0.3, 0.4, 0.5])
        for eps in (0.0, 1e-16, -1e-16, 4e-16):
            for v in (u * (1 + eps), -u * (1 + eps)):
                a = angle_between(u, v)
                assert 0.0 <= a <= 180.0
                assert min(a, 180.0 - a) < 1e-6

    @given(vec, vec)
    def test_symmetric(self, u, v):
        assume(np.linalg.norm(u) > 1e-3 and np.linalg.norm(v) > 1e-3)
        assert angle_between(u, v) == pytest.approx(angle_between(v, u), abs=1e-9)

    @given(vec, vec, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_scale_invariant(self, u, v, a, b):
        assume(np.linalg.norm(u) > 1e-3 and np.linalg.norm(v) > 1e-3)
        assert angle_between(a * u, b * v) == pytest.approx(angle_between(u, v), abs=1e-9)

    def test_2d(self):
        assert angle_between((1, 0), (1, 1)) == pytest.approx(45.0, abs=1e-12)


class TestPlaneAngles:
    def test_horizontal_foot_has_zero_inversion(self):
        assert inversion_eversion(_link((0, 0, 1)), UP) == 0.0

    def test_vertical_foot_is_ninety(self):
        assert inversion_eversion(_link((0, 1, 0)), UP) == 90.0

    def test_foot_along_progression(self):
        assert dorsiflexion_plantarflexion(_link((0, 0, 1)), (0, 0, 1)) == 90.0

    def test_foot_orthogonal_to_progression(self):
        assert dorsiflexion_plantarflexion(_link((1, 0, 0)), (0, 0, 1)) == 0.0

    def test_ankle_right_angle(self):
        assert ankle_angle(_link((0, 0, -1), (0, -1, 0))) == 90.0

    def test_ankle_parallel(self):
        assert ankle_angle(_link((0, -2, 0), (0, -1, 0))) == 0.0

    def test_random_match_oracle_composition(self, rng):
        prog = np.array([0.0, 0.0, 1.0])
        for _ in range(100):
            foot, shank = rng.normal(size=(2, 3))
            link = _link(foot, shank)
            assert inversion_eversion(link, UP) == pytest.approx(90 - angle_deg_mp(foot, UP), abs=1e-9)
            assert dorsiflexion_plantarflexion(link, prog) == pytest.approx(90 - angle_deg_mp(foot, prog), abs=1e-9)
            assert ankle_angle(link) == pytest.approx(angle_deg_mp(foot, shank), abs=1e-9)

    def test_rigid_rotation_invariance(self, rng):
        prog = np.array([0.0, 0.0, 1.0])
        for _ in range(50):
            foot, shank = rng.normal(size=(2, 3))
            R = Rotation.random(random_state=int(rng.integers(1 << 30))).as_matrix()
            a = _link(foot, shank)
            b = _link(R @ foot, R @ shank)
            assert inversion_eversion(b, R @ UP) == pytest.approx(inversion_eversion(a, UP), abs=1e-9)
            assert dorsiflexion_plantarflexion(b, R @ prog) == pytest.approx(
                dorsiflexion_plantarflexion(a, prog), abs=1e-9
            )
            assert ankle_angle(b) == pytest.approx(ankle_angle(a), abs=1e-9)

    def test_coplanar_brute_force(self, rng):
        for _ in range(100):
            heading = rng.uniform(0, 2 * np.pi)
            e = np.array([math.cos(heading), 0.0, math.sin(heading)])
            a, b = rng.uniform(-np.pi, np.pi, size=2)
            foot = math.cos(a) * e + math.sin(a) * UP
            shank = math.cos(b) * e + math.sin(b) * UP
            link = _link(foot, shank)
            # elevation of a unit vector in a vertical plane is asin of its up component
            assert inversion_eversion(link, UP) == pytest.approx(math.degrees(math.asin(math.sin(a))), abs=1e-9)
            d = abs(math.degrees(a - b)) % 360.0
            assert ankle_angle(link) == pytest.approx(min(d, 360.0 - d), abs=1e-9)

    @given(vec)
    def test_plane_angles_bounded(self, foot):
        assume(np.linalg.norm(foot) > 1e-3)
        assert abs(inversion_eversion(_link(foot), UP)) <= 90.0
        assert abs(dorsiflexion_plantarflexion(_link(foot), (0, 0, 1))) <= 90.0


class TestAngleSeries:
    def test_matches_synth_truth(self, normal_session):
        seq, truth = normal_session
        series = angle_series(seq)
        for side in Side:
            np.testing.assert_allclose(series.values[side], truth.angles.values[side], atol=1e-9, rtol=0)

    def test_no_valid_frames_is_empty(self, normal_session):
        seq, _ = normal_session
        keep = [k for k, j in enumerate(seq.joints) if j.landmark != "toe"]
        bare = seq.__class__(
            joints=tuple(seq.joints[k] for k in keep),
            positions=seq.positions[:, keep],
            confidence=seq.confidence[:, keep],
            times=seq.times,
            frame_index=seq.frame_index,
            frame_rate=seq.frame_rate,
            axes=seq.axes,
        )
        assert angle_series(bare).samples == []

    def test_missing_toe_skips_only_that_side(self, normal_session):
        seq, _ = normal_session
        pos = np.array(seq.positions)
        pos[5, seq.joints.index(JointId.LEFT_TOE)] = np.nan
        series = angle_series(seq.with_positions(pos))
        assert not series.valid(Side.LEFT)[5]
        assert series.valid(Side.RIGHT)[5]
        sides = [s.side for s in series.samples if s.frame_index == 5]
        assert sides == [Side.RIGHT]

    def test_one_sample_per_frame_and_side(self, normal_session):
        seq, _ = normal_session
        keys = [(s.frame_index, s.side) for s in angle_series(seq).samples]
        assert len(keys) == len(set(keys))

    def test_walking_direction_follows_travel(self):
        seq, _ = generate(SynthParams(walking_direction=(0.5, 0.0, 1.0), n_strides=3))
        d = walking_direction(seq)
        np.testing.assert_allclose(d, np.array([0.5, 0, 1]) / math.hypot(0.5, 1), atol=1e-9)

    def test_csv_layout(self, normal_session):
        seq, _ = normal_session
        lines = angle_series(seq).to_csv().splitlines()
        assert lines[0] == "frame,t,side,inv_ev_deg,dorsi_plantar_deg,ankle_deg"
        assert len(lines) == 1 + 2 * seq.n_frames
