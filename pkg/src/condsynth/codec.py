"""Mu-law companding between linear amplitudes in [-1,1] and 256 codes.

Continuous companding F(x) = sign(x) * ln(1 + 255|x|) / ln(256), uniformly
quantized onto codes 0..255 with round-half-up.  Code 128 sits at a small
positive amplitude; there is no exact-zero code.  Not G.711 byte-compatible
on purpose: we only need a self-consistent codec.
"""

import numpy as np

MU = 255.0
N_CODES = 256


def compand(x):
    """F(x): [-1,1] -> [-1,1], log compression of the magnitude."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.log1p(MU * np.abs(x)) / np.log(1.0 + MU)


def expand(y):
    """Inverse of compand."""
    y = np.asarray(y, dtype=np.float64)
    return np.sign(y) * (np.expm1(np.abs(y) * np.log(1.0 + MU))) / MU


def mulaw_encode(x):
    """Encode linear amplitude(s) in [-1,1] to integer codes 0..255.

    Out-of-range values are clamped; non-finite input raises ValueError.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("mulaw_encode: non-finite amplitude")
    x = np.clip(x, -1.0, 1.0)
    y = compand(x)
    code = np.floor((y + 1.0) / 2.0 * (N_CODES - 1) + 0.5).astype(np.int64)
    code = np.clip(code, 0, N_CODES - 1)
    if code.ndim == 0:
        return int(code)
    return code


def mulaw_decode(code):
    """Decode integer code(s) 0..255 back to linear amplitude(s)."""
    code = np.asarray(code)
    if np.any(code < 0) or np.any(code > N_CODES - 1):
        raise ValueError("mulaw_decode: code out of range [0, 255]")
    y = code.astype(np.float64) / (N_CODES - 1) * 2.0 - 1.0
    x = expand(y)
    if x.ndim == 0:
        return float(x)
    return x


def code_to_input(code):
    """Normalize a code to the network's unit-interval audio input: c/255."""
    code = np.asarray(code)
    if np.any(code < 0) or np.any(code > N_CODES - 1):
        raise ValueError("code_to_input: code out of range [0, 255]")
    v = code.astype(np.float64) / (N_CODES - 1)
    if v.ndim == 0:
        return float(v)
    return v


# Decoder lookup for the generation loop (one decode per sample).
DECODE_TABLE = mulaw_decode(np.arange(N_CODES))
