"""Synthetic training instruments, the chromatic note table, level utilities.

Two band-limited additive instruments: "even" (fundamental plus even
harmonics 2,4,6,...) and "odd" (fundamental plus odd harmonics 3,5,7,...).
Partial k has amplitude 1/k and zero initial phase; partials stop below
MAX_PARTIAL_HZ to stay under the 8 kHz Nyquist.
"""

from dataclasses import dataclass

import numpy as np

from . import SAMPLE_RATE

E4_HZ = 329.6276  # equal temperament, A440
N_SEMITONES = 12
MAX_PARTIAL_HZ = 7500.0
DEFAULT_RMS = 0.25  # leaves peak headroom at volume_scale = 1.0


@dataclass(frozen=True)
class HarmonicSpec:
    """Partial layout of a synthetic instrument."""

    parity: str  # "even" or "odd"
    rolloff: float = 1.0  # amplitude of partial k is 1 / k**rolloff
    max_freq: float = MAX_PARTIAL_HZ

    def partials(self, f0):
        """Return (multiple, amplitude) pairs, fundamental included."""
        if self.parity not in ("even", "odd"):
            raise ValueError(f"unknown parity {self.parity!r}")
        ks = [1]
        start = 2 if self.parity == "even" else 3
        ks += list(range(start, int(self.max_freq / f0) + 1, 2))
        return [(k, 1.0 / k**self.rolloff) for k in ks if k * f0 < self.max_freq]


SYNTH_EVEN = HarmonicSpec("even")
SYNTH_ODD = HarmonicSpec("odd")


def note_freq(k):
    """Frequency in Hz of chromatic note k = 0..12 (E4 .. E5)."""
    if not 0 <= k <= N_SEMITONES:
        raise ValueError(f"semitone index {k} outside 0..{N_SEMITONES}")
    return E4_HZ * 2.0 ** (k / N_SEMITONES)


def note_table():
    """The 13 chromatic training frequencies E4..E5."""
    return np.array([note_freq(k) for k in range(N_SEMITONES + 1)])


def synth_tone(spec, f0, duration, sample_rate=SAMPLE_RATE):
    """Additive tone: fundamental plus the spec's harmonics, zero phases."""
    if f0 <= 0 or duration <= 0:
        raise ValueError("f0 and duration must be positive")
    if f0 >= sample_rate / 2:
        raise ValueError(f"f0 {f0} Hz at or above Nyquist {sample_rate / 2} Hz")
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    sig = np.zeros(n)
    for k, amp in spec.partials(f0):
        sig += amp * np.sin(2.0 * np.pi * k * f0 * t)
    return sig


def rms_normalize(signal, target_rms=DEFAULT_RMS):
    """Scale a signal to the target RMS.  Caller checks peak <= 1."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.size == 0:
        raise ValueError("cannot normalize an empty signal")
    rms = np.sqrt(np.mean(signal**2))
    if rms == 0.0:
        raise ValueError("cannot normalize an all-zero signal")
    return signal * (target_rms / rms)


def make_training_signal(spec, k, volume_scale, noise_fraction=0.1, seed=0,
                         duration=1.0, source=None):
    """RMS-normalized tone at note k, volume-scaled, plus uniform noise.

    Noise is i.i.d. uniform in +-noise_fraction*volume_scale, added to the
    continuous signal before quantization; result clamped to [-1,1].
    `source` substitutes a pre-trimmed recording for the synthetic tone.
    """
    if not 0.0 < volume_scale <= 1.0:
        raise ValueError("volume_scale must be in (0, 1]")
    if source is None:
        clean = synth_tone(spec, note_freq(k), duration)
    else:
        clean = np.asarray(source, dtype=np.float64)
    sig = rms_normalize(clean) * volume_scale
    if noise_fraction > 0.0:
        rng = np.random.default_rng(seed)
        bound = noise_fraction * volume_scale
        sig = sig + rng.uniform(-bound, bound, size=sig.shape)
    return np.clip(sig, -1.0, 1.0)
