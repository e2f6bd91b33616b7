"""Measurement oracles: f0 tracking, harmonic ratios, spectrograms.

f0 is estimated per 1024-sample window by normalized autocorrelation over
lags covering 250-1000 Hz, with parabolic interpolation around the peak;
confidence is the normalized peak value.  This is the yardstick every
pitch-related experiment is scored with.
"""

from dataclasses import dataclass

import numpy as np

from . import SAMPLE_RATE

F0_WINDOW = 1024
F0_HOP = 160  # 10 ms
F0_MIN = 250.0
F0_MAX = 1000.0
CONFIDENCE_THRESHOLD = 0.5
SILENCE_RMS = 1e-4

SPEC_WINDOW = 1024
SPEC_HOP = 256


@dataclass
class F0Track:
    times: np.ndarray  # seconds, frame centers
    f0: np.ndarray  # Hz; nan where no estimate
    confidence: np.ndarray  # [0,1]

    def voiced(self, threshold=CONFIDENCE_THRESHOLD):
        return np.isfinite(self.f0) & (self.confidence >= threshold)


@dataclass
class Spectrogram:
    times: np.ndarray
    freqs: np.ndarray
    magnitudes: np.ndarray  # (frames, bins)


def estimate_f0(window, sample_rate=SAMPLE_RATE):
    """(f0_hz, confidence) for one frame; (nan, 0.0) when unvoiced/silent."""
    window = np.asarray(window, dtype=np.float64)
    if len(window) != F0_WINDOW:
        raise ValueError(f"expected {F0_WINDOW}-sample window, got {len(window)}")
    if np.sqrt(np.mean(window**2)) < SILENCE_RMS:
        return float("nan"), 0.0
    x = window - window.mean()
    min_lag = int(sample_rate / F0_MAX)
    max_lag = int(np.ceil(sample_rate / F0_MIN))
    # normalized cross-correlation per lag
    n = len(x)
    corr = np.empty(max_lag - min_lag + 1)
    for i, lag in enumerate(range(min_lag, max_lag + 1)):
        a, b = x[:n - lag], x[lag:]
        denom = np.sqrt(np.dot(a, a) * np.dot(b, b))
        corr[i] = np.dot(a, b) / denom if denom > 0 else 0.0
    # prefer the shortest lag whose peak is nearly as strong as the global
    # max: a periodic signal correlates equally at T, 2T, ... and the bare
    # argmax would otherwise pick a subharmonic
    best = int(np.argmax(corr))
    peak = best
    for i in range(1, len(corr) - 1):
        if (corr[i] >= corr[i - 1] and corr[i] >= corr[i + 1]
                and corr[i] >= 0.95 * corr[best]):
            peak = i
            break
    conf = float(np.clip(corr[peak], 0.0, 1.0))
    lag = min_lag + peak
    if 0 < peak < len(corr) - 1:
        y0, y1, y2 = corr[peak - 1], corr[peak], corr[peak + 1]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            lag = lag + 0.5 * (y0 - y2) / denom
    if conf < CONFIDENCE_THRESHOLD:
        return float("nan"), conf
    return sample_rate / lag, conf


def track_f0(signal, hop=F0_HOP, sample_rate=SAMPLE_RATE):
    """Sliding-window f0 every `hop` samples (default 10 ms)."""
    signal = np.asarray(signal, dtype=np.float64)
    if len(signal) < F0_WINDOW:
        raise ValueError(f"signal shorter than one {F0_WINDOW}-sample window")
    starts = range(0, len(signal) - F0_WINDOW + 1, hop)
    times, f0s, confs = [], [], []
    for s in starts:
        f0, conf = estimate_f0(signal[s:s + F0_WINDOW], sample_rate)
        times.append((s + F0_WINDOW / 2) / sample_rate)
        f0s.append(f0)
        confs.append(conf)
    return F0Track(np.array(times), np.array(f0s), np.array(confs))


def even_odd_ratio(signal, f0, sample_rate=SAMPLE_RATE, band=0.03):
    """Energy split of partials k >= 2 by parity, from FFT magnitude.

    Returns (even_fraction, odd_fraction); fractions of total partial
    energy in +-3% bands around k*f0.  The fundamental is excluded.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if len(signal) < 4096:
        raise ValueError("need at least 4096 samples")
    if 2 * f0 * (1 + band) >= sample_rate / 2:
        raise ValueError("first harmonic band exceeds Nyquist")
    spec = np.abs(np.fft.rfft(signal))**2
    freqs = np.fft.rfftfreq(len(signal), 1.0 / sample_rate)
    even = odd = 0.0
    k = 2
    while k * f0 * (1 + band) < sample_rate / 2:
        sel = (freqs >= k * f0 * (1 - band)) & (freqs <= k * f0 * (1 + band))
        e = spec[sel].sum()
        if k % 2 == 0:
            even += e
        else:
            odd += e
        k += 1
    total = even + odd
    if total == 0:
        return 0.0, 0.0
    return even / total, odd / total


@dataclass
class SegmentReport:
    start: float
    duration: float
    target_f0: float  # nan when unknown
    median_f0: float
    drift: float  # max relative deviation from the segment median
    transition_time: float  # seconds; nan for the first segment


def measure_transitions(track, schedule, note_freqs, rel_tol=0.03):
    """Score a step-sequence run: per-note median f0, drift, transition time.

    `note_freqs` maps each segment (by index) to its target f0 in Hz.
    Transition time spans from the last frame within 3% of the previous
    note's f0 to the first frame within 3% of the new note's f0.
    """
    reports = []
    prev_f0 = None
    prev_seg = None
    for i, seg in enumerate(schedule.segments):
        if seg.interp != "hold":
            raise ValueError("measure_transitions needs a step schedule")
        in_seg = (track.times >= seg.start) & (track.times < seg.start + seg.duration)
        if in_seg.sum() < 3:
            raise ValueError(f"segment {i} covered by fewer than 3 frames")
        # central 80% for the median, avoiding transition edges
        lo = seg.start + 0.1 * seg.duration
        hi = seg.start + 0.9 * seg.duration
        central = (track.times >= lo) & (track.times <= hi) & np.isfinite(track.f0)
        med = float(np.median(track.f0[central])) if central.any() else float("nan")
        seg_f0 = track.f0[central]
        drift = float(np.max(np.abs(seg_f0 - med)) / med) if central.any() else float("nan")
        target = note_freqs[i] if note_freqs is not None else float("nan")

        transition = float("nan")
        if prev_f0 is not None and np.isfinite(med):
            # scan frames around the boundary
            t_boundary = seg.start
            near = np.isfinite(track.f0)
            old_ok = near & (np.abs(track.f0 - prev_f0) <= rel_tol * prev_f0)
            new_ok = near & (np.abs(track.f0 - med) <= rel_tol * med)
            before = np.where(old_ok & (track.times <= t_boundary + seg.duration / 2)
                              & (track.times >= prev_seg.start))[0]
            after = np.where(new_ok & (track.times >= t_boundary)
                             & (track.times < seg.start + seg.duration))[0]
            if len(before) and len(after):
                t_last_old = track.times[before[-1]]
                t_first_new = track.times[after[0]]
                transition = max(float(t_first_new - t_last_old), 0.0)
        reports.append(SegmentReport(seg.start, seg.duration, target, med,
                                     drift, transition))
        prev_f0 = med
        prev_seg = seg
    return reports


def spectrogram(signal, window="hann", sample_rate=SAMPLE_RATE):
    """Magnitude STFT, 1024-point window, hop 256."""
    signal = np.asarray(signal, dtype=np.float64)
    if len(signal) < SPEC_WINDOW:
        raise ValueError("signal shorter than one window")
    if window == "hann":
        win = np.hanning(SPEC_WINDOW)
    elif window == "rect":
        win = np.ones(SPEC_WINDOW)
    else:
        raise ValueError(f"unknown window {window!r}")
    starts = range(0, len(signal) - SPEC_WINDOW + 1, SPEC_HOP)
    mags = np.stack([np.abs(np.fft.rfft(signal[s:s + SPEC_WINDOW] * win))
                     for s in starts])
    times = (np.array(starts) + SPEC_WINDOW / 2) / sample_rate
    freqs = np.fft.rfftfreq(SPEC_WINDOW, 1.0 / sample_rate)
    return Spectrogram(times, freqs, mags)


def write_f0_csv(path, track):
    with open(path, "w") as f:
        f.write("time,f0,confidence\n")
        for t, f0, c in zip(track.times, track.f0, track.confidence):
            f.write(f"{t:.4f},{f0:.3f},{c:.3f}\n")


def write_spectrogram_csv(path, spec):
    with open(path, "w") as f:
        f.write("time," + ",".join(f"{fq:.1f}" for fq in spec.freqs) + "\n")
        for t, row in zip(spec.times, spec.magnitudes):
            f.write(f"{t:.4f}," + ",".join(f"{m:.5g}" for m in row) + "\n")
