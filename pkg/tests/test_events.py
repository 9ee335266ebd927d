from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gaitkit.errors import ConfigError, RangeError, SequencingError
from gaitkit.events import (
    EventKind,
    EventParams,
    GaitCycle,
    GaitEvent,
    detect_all_events,
    detect_events,
    events_to_csv,
    normalize_cycle,
    segment_cycles,
)
from gaitkit.ingest import Side
from gaitkit.synth import SynthParams, generate, truth_angles

HS, TO = EventKind.HEEL_STRIKE, EventKind.TOE_OFF


def _ev(kind, frame, side=Side.LEFT, fps=30.0):
    return GaitEvent(kind, side, frame, frame / fps)


def _assert_matches(detected, truth, tol=1):
    assert [e.kind for e in detected] == [e.kind for e in truth]
    for d, t in zip(detected, truth):
        assert abs(d.frame_index - t.frame_index) <= tol, (d, t)


class TestDetectEvents:
    def test_constant_positions_give_no_events(self, normal_session):
        seq, _ = normal_session
        still = seq.with_positions(np.broadcast_to(seq.positions[:1], seq.positions.shape))
        assert detect_all_events(still) == {Side.LEFT: [], Side.RIGHT: []}

    def test_scheduled_frames(self):
        # 2 s cycles with 70% stance and walking starting at 1 s put the left
        # foot's events at frames 30, 48, 90 and 108
        params = SynthParams(cadence=60.0, stance_fraction=(0.7, 0.7), lead_in=1.0, n_strides=2)
        seq, truth = generate(params)
        assert [e.frame_index for e in truth.events[Side.LEFT]] == [30, 48, 90, 108]
        _assert_matches(detect_events(seq, Side.LEFT), truth.events[Side.LEFT])

    @pytest.mark.parametrize("stance", [0.5, 0.58, 0.66, 0.75])
    def test_stance_sweep(self, stance):
        seq, truth = generate(SynthParams(stance_fraction=(stance, stance), seed=1))
        for side in Side:
            _assert_matches(detect_events(seq, side), truth.events[side])

    def test_time_reversal_swaps_kinds(self, normal_session):
        seq, _ = normal_session
        n = seq.n_frames
        reversed_seq = replace(seq, positions=seq.positions[::-1])
        fwd = detect_all_events(seq)
        back = detect_all_events(reversed_seq)
        for side in Side:
            mirrored = [(e.kind, n - 1 - e.frame_index) for e in reversed(back[side])]
            assert len(mirrored) == len(fwd[side])
            for e, (kind, frame) in zip(fwd[side], mirrored):
                assert kind is not e.kind
                assert abs(frame - e.frame_index) <= 1

    def test_alternate_and_increase(self, normal_session):
        seq, _ = normal_session
        for side, evs in detect_all_events(seq).items():
            assert all(a.kind is not b.kind for a, b in zip(evs, evs[1:]))
            assert all(a.timestamp < b.timestamp for a, b in zip(evs, evs[1:]))

    def test_time_shift_moves_every_event(self, normal_session):
        seq, _ = normal_session
        base = detect_all_events(seq)
        moved = detect_all_events(seq.shifted(3.25))
        for side in Side:
            assert [e.frame_index for e in moved[side]] == [e.frame_index for e in base[side]]
            np.testing.assert_allclose(
                [e.timestamp for e in moved[side]], [e.timestamp + 3.25 for e in base[side]], atol=1e-9
            )

    def test_smoothing_keeps_noiseless_timing(self, normal_session):
        seq, truth = normal_session
        for side in Side:
            detected = detect_events(seq, side, EventParams(smooth_window=5))
            _assert_matches(detected, truth.events[side], tol=2)

    def test_short_sequence_gives_nothing(self, normal_session):
        seq, _ = normal_session
        assert detect_events(seq.subset(np.arange(seq.n_frames) < 5), Side.LEFT) == []

    def test_refractory_frames(self):
        assert EventParams().refractory_frames(30.0) == 6


class TestSegmentCycles:
    def test_one_cycle(self):
        (cycle,) = segment_cycles([_ev(HS, 10), _ev(TO, 25), _ev(HS, 60)])
        assert (cycle.start.frame_index, cycle.toe_off.frame_index, cycle.end.frame_index) == (10, 25, 60)
        assert 0 < cycle.stance_duration < cycle.duration

    def test_single_heel_strike(self):
        assert segment_cycles([_ev(HS, 3)]) == []

    def test_ten_strides_nine_cycles(self, normal_session):
        seq, _ = normal_session
        for evs in detect_all_events(seq).values():
            assert len(segment_cycles(evs)) == 9

    def test_leading_toe_off_is_skipped(self):
        assert len(segment_cycles([_ev(TO, 1), _ev(HS, 10), _ev(TO, 25), _ev(HS, 60)])) == 1

    def test_repeated_kind_rejected(self):
        with pytest.raises(SequencingError):
            segment_cycles([_ev(HS, 1), _ev(HS, 10)])

    def test_mixed_sides_rejected(self):
        with pytest.raises(SequencingError):
            segment_cycles([_ev(HS, 1), _ev(TO, 10, Side.RIGHT)])


class TestNormalizeCycle:
    cycle = GaitCycle(Side.LEFT, _ev(HS, 10), _ev(TO, 25), _ev(HS, 40))
    times = np.arange(60) / 30.0

    def test_constant(self):
        out = normalize_cycle(self.times, np.full(60, 5.0), self.cycle)
        assert out.shape == (101,)
        assert (out == 5.0).all()

    @given(st.floats(-10, 10), st.floats(-10, 10))
    def test_affine_exact_and_idempotent(self, a, b):
        out = normalize_cycle(self.times, a * self.times + b, self.cycle)
        frac = np.linspace(0, 1, 101)
        expected = a * (self.cycle.start.timestamp + frac * self.cycle.duration) + b
        np.testing.assert_allclose(out, expected, atol=1e-12)
        t_norm = self.cycle.start.timestamp + frac * self.cycle.duration
        again = normalize_cycle(t_norm, out, self.cycle)
        np.testing.assert_allclose(again, out, atol=1e-12)

    def test_matches_analytic_curve(self):
        # 120 fps keeps linear interpolation of the swing-phase curvature small
        params = SynthParams(seed=5, frame_rate=120.0)
        seq, truth = generate(params)
        for cycle in segment_cycles(truth.events[Side.LEFT])[:4]:
            q = cycle.start.timestamp + np.linspace(0, 1, 101) * cycle.duration
            analytic = truth_angles(params, q)[Side.LEFT]
            for k in range(3):
                got = normalize_cycle(truth.angles.times, truth.angles.values[Side.LEFT][:, k], cycle)
                assert np.max(np.abs(got - analytic[:, k])) < 0.1

    def test_time_shift_leaves_curve_unchanged(self, normal_session):
        seq, truth = normal_session
        values = truth.angles.column("ankle", Side.RIGHT)
        cycle = segment_cycles(truth.events[Side.RIGHT])[2]
        shifted = GaitCycle(
            cycle.side,
            *(replace(e, timestamp=e.timestamp + 7.5) for e in (cycle.start, cycle.toe_off, cycle.end)),
        )
        np.testing.assert_allclose(
            normalize_cycle(seq.times + 7.5, values, shifted), normalize_cycle(seq.times, values, cycle), atol=1e-9
        )

    def test_out_of_range(self):
        late = GaitCycle(Side.LEFT, _ev(HS, 50), _ev(TO, 70), _ev(HS, 90))
        with pytest.raises(RangeError):
            normalize_cycle(self.times, self.times, late)

    def test_too_few_points(self):
        with pytest.raises(ConfigError):
            normalize_cycle(self.times, self.times, self.cycle, n_points=1)


def test_events_csv():
    text = events_to_csv([_ev(TO, 4), _ev(HS, 2, Side.RIGHT)])
    assert text.splitlines() == ["kind,side,frame,t", "HS,right,2,0.06666666666666667", "TO,left,4,0.13333333333333333"]
