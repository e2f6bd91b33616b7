"""Live play service: WebSocket audio streaming with latest-value controls.

One generator per session.  The client's JSON parameter messages overwrite
a latest-value mailbox; the synthesis loop snapshots the mailbox once per
sample, so a change is audible at the next sample boundary.  Audio leaves
as binary frames: 4-byte little-endian sequence number + 512 samples of
signed 16-bit PCM.  Frames are paced to 16 kHz real time when synthesis
keeps up; otherwise they are sent as produced and the status messages
report realtime_factor < 1.
"""

import asyncio
import hashlib
import json
import queue
import struct
import threading
import time

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import SAMPLE_RATE
from .synthesis import Generator
from .training import load_checkpoint

FRAME_SAMPLES = 512
FRAME_QUEUE_DEPTH = 16
STATUS_EVERY_FRAMES = 10
PARAM_FIELDS = ("pitch", "volume", "instrument")


class ParamMailbox:
    """Latest-value parameter store; last write wins.

    Reads and writes swap a whole tuple, which is atomic under the GIL, so
    the synthesis loop never sees a partial update.
    """

    def __init__(self, pitch=0.0, volume=1.0, instrument=0.0):
        self._snapshot = (pitch, volume, instrument)

    def read(self):
        return self._snapshot

    def update(self, **fields):
        p, v, i = self._snapshot
        p = fields.get("pitch", p)
        v = fields.get("volume", v)
        i = fields.get("instrument", i)
        self._snapshot = (p, v, i)


def apply_param_update(msg, mailbox):
    """Validate a ParamMessage dict and write it to the mailbox.

    At least one of pitch/volume/instrument must be present and numeric;
    values clamp to [0,1] (a live performance must not crash on overshoot).
    """
    if not isinstance(msg, dict):
        raise ValueError("parameter message must be a JSON object")
    fields = {}
    for name in PARAM_FIELDS:
        if name in msg:
            v = msg[name]
            if not isinstance(v, (int, float)) or not np.isfinite(v):
                raise ValueError(f"{name} must be a finite number")
            fields[name] = float(np.clip(v, 0.0, 1.0))
    if not fields:
        raise ValueError(f"message carries none of {PARAM_FIELDS}")
    mailbox.update(**fields)
    return fields


def encode_frame(samples):
    """512 amplitudes in [-1,1] -> 1024 bytes of little-endian int16."""
    samples = np.asarray(samples)
    if samples.shape != (FRAME_SAMPLES,):
        raise ValueError(f"expected {FRAME_SAMPLES} samples, got {samples.shape}")
    return np.round(samples * 32767.0).astype("<i2").tobytes()


class Session:
    """Synthesis thread for one connection: mailbox in, frame queue out.

    The queue is bounded; when the network side falls behind, the synthesis
    thread blocks rather than dropping frames.
    """

    def __init__(self, weights):
        self.mailbox = ParamMailbox()
        self.frames = queue.Queue(maxsize=FRAME_QUEUE_DEPTH)
        self.generator = Generator(weights)
        self.frames_made = 0
        self.realtime_factor = 0.0
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def start(self):
        self._thread.start()

    def stop(self):
        self._stop.set()
        # unblock a producer stuck on a full queue
        try:
            self.frames.get_nowait()
        except queue.Empty:
            pass
        self._thread.join(timeout=5.0)

    def _run(self):
        buf = np.empty(FRAME_SAMPLES)
        t0 = time.perf_counter()
        while not self._stop.is_set():
            for i in range(FRAME_SAMPLES):
                buf[i] = self.generator.step(self.mailbox.read())
            seq = self.frames_made
            payload = struct.pack("<I", seq & 0xFFFFFFFF) + encode_frame(buf)
            while not self._stop.is_set():
                try:
                    self.frames.put(payload, timeout=0.2)
                    break
                except queue.Full:
                    continue
            self.frames_made += 1
            elapsed = time.perf_counter() - t0
            if elapsed > 0:
                self.realtime_factor = (
                    self.frames_made * FRAME_SAMPLES / SAMPLE_RATE / elapsed)


def create_app(checkpoint_bytes, static_dir=None):
    """App factory; refuses to start on an unloadable checkpoint.

    `static_dir` optionally serves the browser UI (frontend/ build output)
    from the same origin as the websocket.
    """
    weights, _, header = load_checkpoint(checkpoint_bytes)
    checkpoint_id = hashlib.sha256(checkpoint_bytes).hexdigest()[:16]
    app = FastAPI(title="condsynth play server")
    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=static_dir, html=True),
                  name="ui")

    @app.get("/health")
    def health():
        return {"checkpoint_id": checkpoint_id, "sample_rate": SAMPLE_RATE}

    @app.websocket("/play")
    async def play(ws: WebSocket):
        await ws.accept()
        session = Session(weights)
        session.start()
        stream_start = time.perf_counter()

        async def sender():
            sent = 0
            while True:
                frame = await asyncio.to_thread(_queue_get, session.frames)
                if frame is None:
                    continue
                # pace to real time when synthesis runs ahead
                due = stream_start + sent * FRAME_SAMPLES / SAMPLE_RATE
                delay = due - time.perf_counter()
                if delay > 0:
                    await asyncio.sleep(delay)
                await ws.send_bytes(frame)
                sent += 1
                if sent % STATUS_EVERY_FRAMES == 0:
                    await ws.send_text(json.dumps({
                        "realtime_factor": session.realtime_factor,
                        "frames_sent": sent}))

        send_task = asyncio.create_task(sender())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    applied = apply_param_update(json.loads(text),
                                                 session.mailbox)
                    await ws.send_text(json.dumps({"ok": True,
                                                   "applied": applied}))
                except (ValueError, json.JSONDecodeError) as e:
                    await ws.send_text(json.dumps({"ok": False,
                                                   "error": str(e)}))
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            session.stop()

    return app


def _queue_get(q, timeout=0.2):
    try:
        return q.get(timeout=timeout)
    except queue.Empty:
        return None
