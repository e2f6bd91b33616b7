"""Mono 16-bit PCM WAV read/write at 16 kHz via the stdlib wave module."""

import wave

import numpy as np

from . import SAMPLE_RATE


def read_wav(path, expect_rate=SAMPLE_RATE):
    """Read a mono 16-bit PCM WAV; returns float amplitudes in [-1,1].

    Anything else (stereo, 8/24-bit, wrong rate, compressed) is rejected.
    """
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1:
            raise ValueError(f"{path}: expected mono, got {w.getnchannels()} channels")
        if w.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit PCM, got {8 * w.getsampwidth()}-bit")
        if w.getcomptype() != "NONE":
            raise ValueError(f"{path}: compressed WAV not supported")
        if expect_rate is not None and w.getframerate() != expect_rate:
            raise ValueError(
                f"{path}: expected {expect_rate} Hz, got {w.getframerate()} Hz")
        raw = w.readframes(w.getnframes())
    pcm = np.frombuffer(raw, dtype="<i2")
    return pcm.astype(np.float64) / 32767.0


def write_wav(path, signal, rate=SAMPLE_RATE):
    """Write float amplitudes in [-1,1] as mono 16-bit PCM."""
    signal = np.clip(np.asarray(signal, dtype=np.float64), -1.0, 1.0)
    pcm = np.round(signal * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(pcm.tobytes())
