import numpy as np
import pytest

from condsynth.analysis import (F0Track, estimate_f0, even_odd_ratio,
                                measure_transitions, spectrogram, track_f0)
from condsynth.signals import SYNTH_EVEN, SYNTH_ODD, note_freq, synth_tone
from condsynth.synthesis import step_schedule


def sine(freq, seconds=1.0, amp=0.5, sr=16000):
    return amp * np.sin(2 * np.pi * freq * np.arange(int(seconds * sr)) / sr)


def test_estimate_f0_sine():
    f0, conf = estimate_f0(sine(440.0)[:1024])
    assert f0 == pytest.approx(440.0, abs=1.0)
    assert conf > 0.9


def test_estimate_f0_synth_even():
    sig = synth_tone(SYNTH_EVEN, note_freq(0), 0.1)
    f0, conf = estimate_f0(sig[:1024])
    assert f0 == pytest.approx(note_freq(0), abs=1.0)
    assert conf > 0.9


def test_estimate_f0_noise_unvoiced():
    rng = np.random.default_rng(7)
    f0, conf = estimate_f0(rng.uniform(-0.5, 0.5, 1024))
    assert conf < 0.5
    assert np.isnan(f0)


def test_estimate_f0_silence():
    f0, conf = estimate_f0(np.zeros(1024))
    assert np.isnan(f0) and conf == 0.0


def test_estimate_f0_wrong_window():
    with pytest.raises(ValueError):
        estimate_f0(np.zeros(512))


def test_f0_accuracy_all_chromatic_notes():
    for k in range(13):
        f = note_freq(k)
        est, conf = estimate_f0(sine(f)[:1024])
        assert abs(est - f) / f < 0.005, f"note {k}"
        assert conf > 0.9


def test_track_f0_constant_sine():
    track = track_f0(sine(440.0, 1.0))
    assert np.all(np.abs(track.f0[track.voiced()] - 440.0) < 1.0)
    assert np.all(np.diff(track.times) > 0)


def test_track_f0_frame_counts():
    sig = sine(440.0, 1.0)
    assert len(track_f0(sig[:1024]).times) == 1
    nonoverlap = track_f0(sig, hop=1024)
    assert len(nonoverlap.times) == len(sig) // 1024
    with pytest.raises(ValueError):
        track_f0(sig[:512])


def test_even_odd_ratio_synthetic_instruments():
    f0 = note_freq(0)
    even_frac, odd_frac = even_odd_ratio(synth_tone(SYNTH_EVEN, f0, 1.0), f0)
    assert odd_frac < 0.01
    even_frac2, odd_frac2 = even_odd_ratio(synth_tone(SYNTH_ODD, f0, 1.0), f0)
    assert even_frac2 < 0.01


def test_even_odd_ratio_two_partial_pair():
    f0 = 400.0
    t = np.arange(16000) / 16000
    sig = np.sin(2 * np.pi * 2 * f0 * t) + np.sin(2 * np.pi * 3 * f0 * t)
    even_frac, odd_frac = even_odd_ratio(sig, f0)
    assert even_frac == pytest.approx(0.5, abs=0.01)
    assert odd_frac == pytest.approx(0.5, abs=0.01)


def test_even_odd_ratio_errors():
    with pytest.raises(ValueError):
        even_odd_ratio(sine(440.0)[:2048], 440.0)
    with pytest.raises(ValueError):
        even_odd_ratio(sine(440.0), 5000.0)


def synthetic_track(freqs_per_seg, seg_dur, hop_s=0.01, gap_frames=0):
    """Ideal step-function f0 track with an optional transition gap."""
    times, f0 = [], []
    t = hop_s / 2
    i = 0
    total = len(freqs_per_seg) * seg_dur
    while t < total:
        seg = min(int(t / seg_dur), len(freqs_per_seg) - 1)
        boundary = seg * seg_dur
        if seg > 0 and t - boundary < gap_frames * hop_s:
            f = np.nan  # unvoiced frames during the transition
        else:
            f = freqs_per_seg[seg]
        times.append(t)
        f0.append(f)
        t += hop_s
        i += 1
    f0 = np.array(f0)
    conf = np.where(np.isfinite(f0), 1.0, 0.0)
    return F0Track(np.array(times), f0, conf)


def test_measure_transitions_constructed_gap():
    sched = step_schedule([0.0, 1.0], 1.0)
    track = synthetic_track([330.0, 660.0], 1.0, gap_frames=3)
    reports = measure_transitions(track, sched, [330.0, 660.0])
    assert reports[0].drift == 0.0
    assert np.isnan(reports[0].transition_time)
    assert reports[1].median_f0 == pytest.approx(660.0)
    # last old frame at 0.995, first new frame at 1.035: 4 hops
    assert reports[1].transition_time == pytest.approx(0.04, abs=1e-9)


def test_measure_transitions_constant():
    sched = step_schedule([0.5], 1.0)
    track = synthetic_track([440.0], 1.0)
    reports = measure_transitions(track, sched, [440.0])
    assert reports[0].drift == 0.0
    assert reports[0].median_f0 == pytest.approx(440.0)


def test_measure_transitions_needs_frames():
    sched = step_schedule([0.0], 0.02)
    track = synthetic_track([330.0], 0.02)
    with pytest.raises(ValueError, match="fewer than 3 frames"):
        measure_transitions(track, sched, [330.0])


def test_spectrogram_peak_tracking():
    spec = spectrogram(sine(440.0, 0.5))
    peak_freqs = spec.freqs[np.argmax(spec.magnitudes, axis=1)]
    assert np.all(np.abs(peak_freqs - 440.0) < 16000 / 1024)
    assert spec.magnitudes.shape[1] == 1024 // 2 + 1


def test_spectrogram_zero_signal():
    spec = spectrogram(np.zeros(2048))
    assert np.all(spec.magnitudes == 0)


def test_spectrogram_parseval_rect():
    rng = np.random.default_rng(0)
    sig = rng.normal(size=1024)
    spec = spectrogram(sig, window="rect")
    # Parseval: sum |X|^2 == N * sum x^2 for rfft with both-sided counting
    mags = spec.magnitudes[0] ** 2
    total = mags[0] + mags[-1] + 2 * mags[1:-1].sum()
    assert total == pytest.approx(1024 * np.sum(sig**2), rel=0.01)


def test_spectrogram_too_short():
    with pytest.raises(ValueError):
        spectrogram(np.zeros(100))
