export const FRAME_SAMPLES = 512;
export const SAMPLE_RATE = 16000;
export const FRAME_SECONDS = FRAME_SAMPLES / SAMPLE_RATE; // 32 ms
export const TARGET_BUFFER_FRAMES = 3; // ~96 ms of cushion

export interface DecodedFrame {
  seq: number;
  samples: Float32Array;
}

/** Wire format: 4-byte little-endian sequence number, then 512 s16le samples. */
export function decodeFrame(buf: ArrayBuffer): DecodedFrame {
  if (buf.byteLength !== 4 + FRAME_SAMPLES * 2) {
    throw new Error(`bad frame length ${buf.byteLength}`);
  }
  const view = new DataView(buf);
  const seq = view.getUint32(0, true);
  const samples = new Float32Array(FRAME_SAMPLES);
  for (let i = 0; i < FRAME_SAMPLES; i++) {
    samples[i] = view.getInt16(4 + 2 * i, true) / 32767;
  }
  return { seq, samples };
}

/** Minimal slice of AudioContext so tests can run without a browser. */
export interface AudioSink {
  now(): number;
  play(samples: Float32Array, when: number): void;
}

/**
 * Schedules decoded frames back-to-back on the audio clock, keeping a target
 * cushion of 3 frames between "now" and the scheduled write head.  Counts an
 * underrun whenever the cushion is exhausted (late frame) or the sequence
 * numbers skip, then resynchronizes.
 */
export class FramePlayer {
  underruns = 0;
  framesPlayed = 0;
  private nextSeq: number | null = null;
  private nextStartTime = -Infinity; // forces the cushion on the first frame

  constructor(private sink: AudioSink) {}

  get bufferDepth(): number {
    const depth = (this.nextStartTime - this.sink.now()) / FRAME_SECONDS;
    return Math.max(0, depth);
  }

  onFrame(buf: ArrayBuffer): void {
    const { seq, samples } = decodeFrame(buf);
    if (this.nextSeq !== null && seq !== this.nextSeq) {
      this.underruns++; // gap in the stream; resync to the new sequence
    }
    this.nextSeq = seq + 1;

    const now = this.sink.now();
    if (this.nextStartTime < now) {
      if (this.framesPlayed > 0) this.underruns++; // cushion ran dry
      this.nextStartTime = now + TARGET_BUFFER_FRAMES * FRAME_SECONDS;
    }
    this.sink.play(samples, this.nextStartTime);
    this.nextStartTime += FRAME_SECONDS;
    this.framesPlayed++;
  }

  reset(): void {
    this.nextSeq = null;
    this.nextStartTime = -Infinity;
    this.framesPlayed = 0;
  }
}

/** Real AudioContext-backed sink used by the page. */
export function contextSink(ctx: AudioContext): AudioSink {
  return {
    now: () => ctx.currentTime,
    play: (samples, when) => {
      const buffer = ctx.createBuffer(1, samples.length, SAMPLE_RATE);
      buffer.getChannelData(0).set(samples);
      const source = ctx.createBufferSource();
      source.buffer = buffer;
      source.connect(ctx.destination);
      source.start(Math.max(when, ctx.currentTime));
    },
  };
}
