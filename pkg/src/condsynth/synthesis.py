"""Autoregressive generation driven by a parameter schedule.

One sample in, one sample out: the argmax output code is fed back as the
next audio input.  Starts from the zero hidden state and the mu-law code of
amplitude 0 (no audio priming); the conditioning input alone establishes
pitch.  Argmax ties break toward the lowest code.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import SAMPLE_RATE
from .codec import DECODE_TABLE, code_to_input, mulaw_encode
from .corpus import ParamPoint
from .network import sigmoid, zero_state

ARPEGGIO_PITCHES = (0.0, 4 / 12, 7 / 12, 1.0, 7 / 12, 4 / 12, 0.0)  # E major


@dataclass(frozen=True)
class Segment:
    start: float  # seconds
    duration: float
    p0: ParamPoint
    p1: ParamPoint  # == p0 for constant segments
    interp: str = "hold"  # "hold" or "ramp"


@dataclass
class ParamSchedule:
    """Contiguous, non-overlapping segments covering [0, end)."""

    segments: list

    def __post_init__(self):
        t = self.segments[0].start
        for seg in self.segments:
            if abs(seg.start - t) > 1e-9 or seg.duration <= 0:
                raise ValueError("segments must be contiguous and positive")
            t = seg.start + seg.duration

    @property
    def end(self):
        last = self.segments[-1]
        return last.start + last.duration

    def eval(self, t):
        """ParamPoint at time t; right-continuous at boundaries."""
        if not 0.0 <= t <= self.end:
            raise ValueError(f"t={t} outside schedule [0, {self.end}]")
        for seg in self.segments:
            if seg.start <= t < seg.start + seg.duration:
                break
        else:
            seg = self.segments[-1]
        if seg.interp == "hold":
            return seg.p0
        frac = (t - seg.start) / seg.duration
        a, b = seg.p0.as_array(), seg.p1.as_array()
        v = np.clip(a + frac * (b - a), 0.0, 1.0)
        return ParamPoint(*v)


def schedule_eval(schedule, t):
    return schedule.eval(t)


def constant_schedule(point=None, duration=1.0, pitch=0.0, volume=1.0,
                      instrument=0.0):
    if point is None:
        point = ParamPoint(pitch, volume, instrument)
    return ParamSchedule([Segment(0.0, duration, point, point)])


def pitch_sweep_schedule(duration=3.0, low=0.0, high=1.0, volume=1.0,
                         instrument=0.0):
    """Triangular pitch ramp low -> high -> low with other params held."""
    a = ParamPoint(low, volume, instrument)
    b = ParamPoint(high, volume, instrument)
    half = duration / 2.0
    return ParamSchedule([Segment(0.0, half, a, b, "ramp"),
                          Segment(half, half, b, a, "ramp")])


def instrument_sweep_schedule(duration=3.0, pitch=0.0, volume=1.0):
    """Instrument parameter 0 -> 1 -> 0 with pitch and volume held."""
    a = ParamPoint(pitch, volume, 0.0)
    b = ParamPoint(pitch, volume, 1.0)
    half = duration / 2.0
    return ParamSchedule([Segment(0.0, half, a, b, "ramp"),
                          Segment(half, half, b, a, "ramp")])


def arpeggio_schedule(duration=5.0, volume=1.0, instrument=0.0):
    """E-major chord up and back (E4, G#4, B4, E5, B4, G#4, E4), 7 equal notes."""
    note = duration / len(ARPEGGIO_PITCHES)
    segs = []
    for i, p in enumerate(ARPEGGIO_PITCHES):
        pt = ParamPoint(p, volume, instrument)
        segs.append(Segment(i * note, note, pt, pt))
    return ParamSchedule(segs)


def step_schedule(pitches, note_duration, volume=1.0, instrument=0.0):
    segs = []
    for i, p in enumerate(pitches):
        pt = ParamPoint(p, volume, instrument)
        segs.append(Segment(i * note_duration, note_duration, pt, pt))
    return ParamSchedule(segs)


def make_schedule(kind, **kw):
    builders = {"constant": constant_schedule,
                "pitch-sweep": pitch_sweep_schedule,
                "instrument-sweep": instrument_sweep_schedule,
                "arpeggio": arpeggio_schedule,
                "steps": step_schedule}
    if kind not in builders:
        raise ValueError(f"unknown schedule kind {kind!r}; "
                         f"choose from {sorted(builders)}")
    return builders[kind](**kw)


@dataclass
class GenerationConfig:
    total_samples: int = SAMPLE_RATE
    seed_code: int = None  # default mulaw_encode(0)
    warmup: int = 0  # samples dropped from the front of the outputs

    def __post_init__(self):
        if self.total_samples < 0:
            raise ValueError("total_samples must be >= 0")
        if self.seed_code is None:
            self.seed_code = mulaw_encode(0.0)


@dataclass
class GenerationResult:
    signal: np.ndarray  # decoded amplitudes
    codes: np.ndarray  # the argmax code stream
    samples_per_second: float  # measured synthesis throughput


class Generator:
    """Stateful single-voice generator; one sample per step() call.

    Owns its hidden state; weights are read-only and shareable.  The live
    play server drives this directly with per-sample parameter snapshots.
    """

    def __init__(self, weights, seed_code=None):
        self.weights = weights
        self.dtype = weights.w_in.dtype
        self.h = [zero_state(weights.dims, 1, self.dtype)[i, 0]
                  for i in range(weights.dims.num_layers)]
        self.code = mulaw_encode(0.0) if seed_code is None else seed_code
        self._x = np.empty(weights.dims.input_size, dtype=self.dtype)

    def step(self, params):
        """Advance one sample; params is a ParamPoint (or (p,v,i) tuple).

        Returns the decoded amplitude; the chosen code is in self.code.
        """
        w = self.weights
        x = self._x
        x[0] = code_to_input(self.code)
        if isinstance(params, ParamPoint):
            x[1], x[2], x[3] = params.pitch, params.volume, params.instrument
        else:
            x[1], x[2], x[3] = params
        a = x @ w.w_in + w.b_in
        for li, lay in enumerate(w.layers):
            h = self.h[li]
            z = sigmoid(a @ lay.w_z + h @ lay.u_z + lay.b_z)
            r = sigmoid(a @ lay.w_r + h @ lay.u_r + lay.b_r)
            hc = np.tanh(a @ lay.w_h + (r * h) @ lay.u_h + lay.b_h)
            a = (1.0 - z) * h + z * hc
            self.h[li] = a
        logits = a @ w.w_out + w.b_out
        self.code = int(np.argmax(logits))  # first max = lowest code on ties
        return DECODE_TABLE[self.code]


def generate(weights, schedule, config=None):
    """Run the feedback loop over a schedule; deterministic.

    The conditioning input at step t is schedule.eval(t / 16000).
    """
    config = config or GenerationConfig()
    n = config.total_samples
    if n > 0 and (n - 1) / SAMPLE_RATE > schedule.end:
        raise ValueError("schedule shorter than requested duration")
    gen = Generator(weights, config.seed_code)
    signal = np.empty(n)
    codes = np.empty(n, dtype=np.int64)
    t0 = time.perf_counter()
    for t in range(n):
        signal[t] = gen.step(schedule.eval(t / SAMPLE_RATE))
        codes[t] = gen.code
    elapsed = time.perf_counter() - t0
    w = config.warmup
    return GenerationResult(signal[w:], codes[w:],
                            n / elapsed if elapsed > 0 else float("inf"))
