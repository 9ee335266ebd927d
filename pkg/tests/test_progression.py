import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaitkit.errors import DegenerateFitError, EmptyInputError
from gaitkit.events import detect_all_events, segment_cycles
from gaitkit.ingest import Side
from gaitkit.progression import (
    ProgressionLine,
    fit_progression_line,
    fit_residuals,
    foot_progression_angle,
    session_progression,
)
from gaitkit.synth import SynthParams, generate
from oracles import line_fit_qr

Z_LINE = ProgressionLine.from_params(0.0, 0.0, 0.0, 0.0)


def _params(line):
    return np.array([line.m, line.n, line.x0, line.y0])


def _yawed(deg, n=5):
    a = math.radians(deg)
    return np.tile([math.sin(a), 0.0, math.cos(a)], (n, 1))


def _cycles(seq):
    return [c for evs in detect_all_events(seq).values() for c in segment_cycles(evs)]


class TestFit:
    def test_exact_collinear(self):
        z = np.arange(5.0)
        pts = np.column_stack([2 * z + 1, -z + 3, z])
        np.testing.assert_allclose(_params(fit_progression_line(pts)), [2, -1, 1, 3], atol=1e-12)

    def test_two_points_interpolated(self):
        pts = np.array([[1.0, 2.0, 0.5], [-1.0, 0.0, 2.5]])
        line = fit_progression_line(pts)
        np.testing.assert_allclose(fit_residuals(pts, line), 0.0, atol=1e-12)

    def test_matches_qr_oracle(self, rng):
        for _ in range(50):
            n = int(rng.integers(5, 200))
            z = rng.uniform(-3, 8, n)
            pts = np.column_stack([0.3 * z + 1 + rng.normal(0, 0.05, n), -0.1 * z + 0.9 + rng.normal(0, 0.05, n), z])
            got = _params(fit_progression_line(pts))
            want = np.array(line_fit_qr(pts))
            np.testing.assert_allclose(got, want, rtol=1e-8, atol=1e-12)

    def test_residuals_orthogonal_to_design(self, rng):
        pts = rng.normal(size=(40, 3)) + [0, 0, 100]
        res = fit_residuals(pts, fit_progression_line(pts))
        design = np.column_stack([pts[:, 2], np.ones(40)])
        assert np.abs(design.T @ res).max() < 1e-8

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-50, 50))
    def test_translation_equivariance(self, dx, dy, dz):
        pts = np.random.default_rng(3).normal(size=(12, 3)) * [0.1, 0.1, 2.0]
        a = fit_progression_line(pts)
        b = fit_progression_line(pts + [dx, dy, dz])
        np.testing.assert_allclose([b.m, b.n], [a.m, a.n], atol=1e-9)
        np.testing.assert_allclose([b.x0, b.y0], [a.x0 + dx - a.m * dz, a.y0 + dy - a.n * dz], atol=1e-9)

    def test_no_better_line_on_grid(self, rng):
        for _ in range(5):
            pts = rng.normal(size=(20, 3)) * [0.2, 0.2, 3.0]
            line = fit_progression_line(pts)
            best = (fit_residuals(pts, line) ** 2).sum()
            z = pts[:, 2]
            for dm in np.tan(np.radians(np.arange(-5, 6))):
                for dn in np.tan(np.radians(np.arange(-5, 6))):
                    m, n = line.m + dm, line.n + dn
                    # for fixed slopes the best intercepts are the mean residuals
                    x0 = np.mean(pts[:, 0] - m * z)
                    y0 = np.mean(pts[:, 1] - n * z)
                    rss = ((pts[:, 0] - m * z - x0) ** 2 + (pts[:, 1] - n * z - y0) ** 2).sum()
                    assert rss >= best - 1e-12

    def test_direction_unit(self, rng):
        line = fit_progression_line(rng.normal(size=(10, 3)))
        assert np.linalg.norm(line.direction) == pytest.approx(1.0, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateFitError):
            fit_progression_line([[0, 0, 1]])
        with pytest.raises(DegenerateFitError):
            fit_progression_line([[0, 0, 1], [1, 0, 1]])


class TestFootProgressionAngle:
    def test_parallel_is_zero(self):
        assert foot_progression_angle(_yawed(0), Z_LINE) == 0.0

    def test_constant_rotation(self):
        assert foot_progression_angle(_yawed(10), Z_LINE, Side.LEFT) == pytest.approx(10.0, abs=1e-12)
        assert foot_progression_angle(_yawed(-10), Z_LINE, Side.RIGHT) == pytest.approx(10.0, abs=1e-12)

    def test_projection_ignores_pitch(self):
        feet = _yawed(12) + [0, 0.3, 0]
        assert foot_progression_angle(feet, Z_LINE) == pytest.approx(12.0, abs=1e-9)
        assert abs(foot_progression_angle(feet, Z_LINE, project=False)) > 12.0

    @given(st.floats(1e-3, 1e3))
    def test_scale_invariant(self, scale):
        feet = np.random.default_rng(9).normal(size=(8, 3)) + [0, 0, 3]
        assert foot_progression_angle(scale * feet, Z_LINE) == pytest.approx(
            foot_progression_angle(feet, Z_LINE), abs=1e-9
        )

    def test_reversed_walk_negates(self, rng):
        feet = rng.normal(size=(8, 3)) + [0, 0, 3]
        line = ProgressionLine.from_params(0.1, 0.0, 0.0, 0.0)
        flipped = feet * [1, 1, -1]
        back = ProgressionLine(line.m, line.n, line.x0, line.y0, line.direction * [1, 1, -1])
        assert foot_progression_angle(flipped, back) == pytest.approx(-foot_progression_angle(feet, line), abs=1e-9)

    def test_vertical_feet_rejected(self):
        with pytest.raises(EmptyInputError):
            foot_progression_angle([[0, 1, 0]], Z_LINE)


class TestSession:
    def test_zero_cycles(self, normal_session):
        assert session_progression(normal_session[0], []) == []

    def test_zero_toe_out(self):
        seq, _ = generate(SynthParams(toe_out=(0.0, 0.0)))
        samples = session_progression(seq, _cycles(seq))
        assert samples and all(abs(s.angle) <= 0.2 for s in samples)

    def test_opposite_toe_out_per_side(self):
        seq, _ = generate(SynthParams(toe_out=(8.0, -8.0)))
        samples = session_progression(seq, _cycles(seq))
        left = np.mean([s.angle for s in samples if s.side is Side.LEFT])
        right = np.mean([s.angle for s in samples if s.side is Side.RIGHT])
        assert left == pytest.approx(8.0, abs=0.5)
        assert right == pytest.approx(-8.0, abs=0.5)

    def test_pronation_per_step(self):
        seq, truth = generate(SynthParams.for_condition("pronation", seed=2))
        for s in session_progression(seq, _cycles(seq)):
            assert s.angle == pytest.approx(truth.fpa[s.side], abs=0.5)

    def test_oblique_walk(self):
        seq, _ = generate(SynthParams(walking_direction=(0.6, 0.0, 1.0), toe_out=(8.0, 8.0)))
        samples = session_progression(seq, _cycles(seq))
        assert all(abs(s.angle - 8.0) < 0.5 for s in samples)

    def test_fpa_bounded(self, normal_session):
        seq, _ = normal_session
        assert all(abs(s.angle) <= 90 for s in session_progression(seq, _cycles(seq)))
