import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaitkit.errors import InconsistentLandmarksError, InsufficientLandmarksError
from gaitkit.ingest import Side
from gaitkit.kinematics import angle_series
from gaitkit.sync import TimeMapping, align, detect_jumps, resample_to
from gaitkit.synth import SynthParams, generate, generate_pair

FRAME = 1 / 30


@pytest.fixture(scope="module")
def jump_session():
    return generate(SynthParams(n_strides=8, lead_out=3.0, jump_times=(1.0, 12.0), seed=6))


class TestDetectJumps:
    def test_no_jumps(self):
        seq, _ = generate(SynthParams(jump_times=()))
        assert detect_jumps(seq) == []

    def test_injected_jumps(self, jump_session):
        seq, _ = jump_session
        np.testing.assert_allclose(detect_jumps(seq), [1.0, 12.0], atol=FRAME)

    def test_time_shift(self, jump_session):
        seq, _ = jump_session
        np.testing.assert_allclose(detect_jumps(seq.shifted(2.0)), [3.0, 14.0], atol=FRAME)

    def test_vertical_offset_invariant(self, jump_session):
        seq, _ = jump_session
        lifted = seq.with_positions(seq.positions + [0.0, 0.7, 0.0])
        np.testing.assert_allclose(detect_jumps(lifted), detect_jumps(seq), atol=1e-9)

    def test_noisy_jumps(self):
        seq, _ = generate(SynthParams(noise_sigma=0.01, seed=8))
        apexes = detect_jumps(seq)
        assert len(apexes) == 2


class TestAlign:
    def test_identity(self):
        m = align([1.0, 9.0], [1.0, 9.0])
        assert (m.rate, m.offset) == (1.0, 0.0)

    def test_pure_shift(self):
        m = align([1.0, 9.0], [1.0 + 30 * FRAME, 9.0 + 30 * FRAME])
        assert m.rate == pytest.approx(1.0, abs=1e-12)
        assert m.offset == pytest.approx(1.0, abs=1e-12)

    @given(st.floats(0.9, 1.1), st.floats(-10, 10), st.lists(st.floats(0, 100), min_size=2, max_size=6, unique=True))
    def test_exact_recovery(self, rate, offset, src):
        src = sorted(src)
        if src[-1] - src[0] < 1.0:
            return
        ref = [rate * s + offset for s in src]
        m = align(src, ref)
        assert m.rate == pytest.approx(rate, abs=1e-12)
        assert m.offset == pytest.approx(offset, abs=1e-10)

    @given(st.floats(0.95, 1.05), st.floats(-5, 5))
    def test_inverse_consistent(self, rate, offset):
        src = [1.0, 5.5, 13.0]
        ref = [rate * s + offset for s in src]
        ident = align(src, ref).compose(align(ref, src))
        assert ident.rate == pytest.approx(1.0, abs=1e-9)
        assert ident.offset == pytest.approx(0.0, abs=1e-9)

    def test_rate_mismatch_on_synth(self):
        est, ref, _ = generate_pair(SynthParams(seed=4), offset=-1.5, rate=1.02)
        m = align(detect_jumps(est), detect_jumps(ref))
        assert m.rate == pytest.approx(1.02, abs=1e-3)
        assert m.offset == pytest.approx(-1.5, abs=FRAME)

    def test_too_few_landmarks(self):
        with pytest.raises(InsufficientLandmarksError):
            align([1.0], [1.0, 2.0])

    def test_reversed_order_rejected(self):
        with pytest.raises(InconsistentLandmarksError):
            align([1.0, 5.0], [5.0, 1.0])

    def test_unequal_counts_use_endpoints(self):
        m = align([1.0, 3.0, 10.0], [2.0, 11.0])
        assert (m.rate, m.offset) == (1.0, 1.0)


class TestTimeMapping:
    def test_invalid_rate(self):
        with pytest.raises(InconsistentLandmarksError):
            TimeMapping(rate=0.0)

    @given(st.floats(0.5, 2), st.floats(-100, 100), st.floats(-100, 100))
    def test_round_trip(self, rate, offset, t):
        m = TimeMapping(offset, rate)
        assert m.to_source(m.to_reference(t)) == pytest.approx(t, abs=1e-9)
        inv = m.inverse()
        assert inv.to_reference(m.to_reference(t)) == pytest.approx(t, abs=1e-9)


class TestResample:
    t = np.arange(10) / 10

    def test_identity(self):
        v = np.sin(self.t)
        np.testing.assert_array_equal(resample_to(self.t, v, TimeMapping(), self.t), v)

    @given(st.floats(0.5, 2), st.floats(-1, 1))
    def test_constant(self, rate, offset):
        target = np.linspace(-2, 3, 40)
        out = resample_to(self.t, np.full(10, 4.0), TimeMapping(offset, rate), target)
        inside = np.isfinite(out)
        assert (out[inside] == 4.0).all()

    def test_outside_span_is_nan(self):
        out = resample_to(self.t, self.t, TimeMapping(), [-0.5, 0.45, 2.0])
        assert np.isnan(out[[0, 2]]).all()
        assert out[1] == pytest.approx(0.45)

    def test_missing_neighbour_is_nan(self):
        v = self.t.copy()
        v[3] = np.nan
        out = resample_to(self.t, v, TimeMapping(), [0.25, 0.35, 0.2])
        assert np.isnan(out[:2]).all() and out[2] == pytest.approx(0.2)

    def test_synth_pair_alignment(self):
        # a whole-frame offset puts every reference frame on an estimate frame
        est, ref, truth = generate_pair(SynthParams(seed=2), offset=2.0, rate=1.0)
        m = align(detect_jumps(est), detect_jumps(ref))
        est_angles = angle_series(est)
        ref_truth = truth.extra["reference_angles"]
        for side in Side:
            on_ref = resample_to(est_angles.times, est_angles.values[side], m, ref_truth.times)
            ok = np.isfinite(on_ref).all(axis=1)
            assert ok.sum() > 0.9 * len(ok)
            assert np.abs(on_ref[ok] - ref_truth.values[side][ok]).max() < 1e-6

    def test_multichannel_shape(self):
        v = np.column_stack([self.t, 2 * self.t])
        assert resample_to(self.t, v, TimeMapping(), self.t[:4]).shape == (4, 2)
