"""Conditioned training sequences and batches.

A training example is 256 steps of 4-component inputs (normalized audio
code, pitch, volume, instrument) with the next sample's mu-law code as the
target at every step.  Conditioning is constant within a sequence; training
uses fixed parameter configurations only.
"""

from dataclasses import dataclass, field

import numpy as np

from . import SAMPLE_RATE
from .codec import code_to_input, mulaw_encode
from .signals import SYNTH_EVEN, SYNTH_ODD, make_training_signal

SEQ_LEN = 256

# steady-state trim bounds, seconds
TRIM_START = 0.5
TRIM_END = 3.0
TRIM_MIN_KEEP = 1.0

INSTRUMENT_SPECS = {"even": SYNTH_EVEN, "odd": SYNTH_ODD}


@dataclass(frozen=True)
class ParamPoint:
    """Conditioning coordinates, each in [0,1]."""

    pitch: float
    volume: float
    instrument: float

    def __post_init__(self):
        for name in ("pitch", "volume", "instrument"):
            v = getattr(self, name)
            if not np.isfinite(v) or not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0,1]")

    def as_array(self):
        return np.array([self.pitch, self.volume, self.instrument])


@dataclass
class ConditionedSequence:
    """inputs: (256, 4) float array; targets: (256,) int codes."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        assert self.inputs.shape == (SEQ_LEN, 4)
        assert self.targets.shape == (SEQ_LEN,)


@dataclass
class CorpusConfig:
    """Which cells of the (instrument, pitch, volume) grid to generate."""

    instruments: list = field(default_factory=lambda: ["even"])
    semitones: list = field(default_factory=lambda: list(range(13)))
    n_volumes: int = 1
    noise_fraction: float = 0.1
    sequences_per_cell: int = 64
    signal_duration: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.instruments or not self.semitones or self.n_volumes < 1:
            raise ValueError("need at least one instrument, pitch, and volume")


def trim_steady_state(recording, sample_rate=SAMPLE_RATE):
    """Drop the onset (first 0.5 s) and decay (past 3.0 s) of a recording."""
    recording = np.asarray(recording)
    start = int(TRIM_START * sample_rate)
    end = min(int(TRIM_END * sample_rate), len(recording))
    if end - start < TRIM_MIN_KEEP * sample_rate:
        raise ValueError(
            f"recording too short: {len(recording) / sample_rate:.2f} s leaves "
            f"{max(end - start, 0) / sample_rate:.2f} s after trimming; need >= "
            f"{TRIM_START + TRIM_MIN_KEEP:.1f} s")
    return recording[start:end]


def param_point(instrument_index, n_instruments, k, volume_level, n_volumes=24):
    """Map grid indices to [0,1]^3 coordinates.

    pitch = k/12; volume = i/N for levels i = 1..N (no silent level);
    instrument = j/(n-1), or 0.0 for a single instrument.
    """
    if not 0 <= instrument_index < n_instruments:
        raise ValueError("instrument index out of range")
    if not 0 <= k <= 12:
        raise ValueError("semitone index out of range")
    if not 1 <= volume_level <= n_volumes:
        raise ValueError("volume level out of range")
    inst = 0.0 if n_instruments == 1 else instrument_index / (n_instruments - 1)
    return ParamPoint(pitch=k / 12.0, volume=volume_level / n_volumes,
                      instrument=inst)


def draw_sequences(signal, params, count, seed=0):
    """Draw `count` random 256-step windows (with replacement) from a signal.

    inputs[t] = (code_to_input(code of sample at offset+t), pitch, volume,
    instrument); targets[t] = code of the next sample.
    """
    signal = np.asarray(signal)
    if len(signal) < SEQ_LEN + 1:
        raise ValueError(f"signal length {len(signal)} < {SEQ_LEN + 1}")
    codes = mulaw_encode(signal)
    audio_in = code_to_input(codes)
    cond = params.as_array()
    rng = np.random.default_rng(seed)
    offsets = rng.integers(0, len(signal) - SEQ_LEN, size=count)
    out = []
    for off in offsets:
        inputs = np.empty((SEQ_LEN, 4))
        inputs[:, 0] = audio_in[off:off + SEQ_LEN]
        inputs[:, 1:] = cond
        out.append(ConditionedSequence(inputs, codes[off + 1:off + SEQ_LEN + 1].copy()))
    return out


def make_batches(sequences, batch_size, seed=0):
    """Seeded shuffle, then partition; the final short batch is kept."""
    if not sequences:
        raise ValueError("no sequences to batch")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = np.random.default_rng(seed).permutation(len(sequences))
    shuffled = [sequences[i] for i in order]
    return [shuffled[i:i + batch_size] for i in range(0, len(shuffled), batch_size)]


def build_corpus(config, sources=None):
    """Generate all sequences for a CorpusConfig.

    `sources` optionally maps instrument name -> pre-trimmed recording;
    names absent from it use the synthetic instruments.  Deterministic: each
    grid cell derives its own seed from config.seed in a fixed order.
    """
    sources = sources or {}
    sequences = []
    n_inst = len(config.instruments)
    for j, name in enumerate(config.instruments):
        spec = None if name in sources else INSTRUMENT_SPECS[name]
        for k in config.semitones:
            for level in range(1, config.n_volumes + 1):
                cell_seed = np.random.default_rng(
                    (config.seed, j, k, level)).integers(2**62)
                params = param_point(j, n_inst, k, level, config.n_volumes)
                sig = make_training_signal(
                    spec, k, params.volume, config.noise_fraction,
                    seed=cell_seed, duration=config.signal_duration,
                    source=sources.get(name))
                sequences.extend(draw_sequences(
                    sig, params, config.sequences_per_cell, seed=cell_seed + 1))
    return sequences
