"""Conditioned autoregressive GRU sound synthesizer.

A small recurrent network predicts one 8-bit mu-law audio sample per step,
conditioned on pitch/volume/instrument values in [0,1].  The package covers
the whole loop: synthetic corpus generation, from-scratch BPTT training,
argmax autoregressive generation, pitch-tracking analysis, and a live
WebSocket play server.
"""

SAMPLE_RATE = 16000

__version__ = "0.1.0"
