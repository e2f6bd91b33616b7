import { ParamPoint, clamp01 } from './state';

export type ParamMessage = Partial<ParamPoint>;

const COALESCE_MS = 16;

/**
 * Batches slider/key events into at most one websocket message per 16 ms,
 * sending only the fields that changed since the last send.  Messages are
 * dropped (not buffered) while disconnected — stale parameter values are
 * worse than none once we reconnect.
 */
export class ParamSender {
  private pending: ParamMessage = {};
  private sent: ParamPoint;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private send: (msg: ParamMessage) => void,
    private connected: () => boolean,
    initial: ParamPoint = { pitch: 0, volume: 1, instrument: 0 },
  ) {
    this.sent = { ...initial };
  }

  update(field: keyof ParamPoint, value: number): void {
    this.pending[field] = clamp01(value);
    if (this.timer === null) {
      this.timer = setTimeout(() => {
        this.timer = null;
        this.flush();
      }, COALESCE_MS);
    }
  }

  flush(): void {
    const msg: ParamMessage = {};
    for (const field of ['pitch', 'volume', 'instrument'] as const) {
      const v = this.pending[field];
      if (v !== undefined && v !== this.sent[field]) {
        msg[field] = v;
      }
    }
    this.pending = {};
    if (Object.keys(msg).length === 0) return;
    if (!this.connected()) return; // drop, don't buffer
    Object.assign(this.sent, msg);
    this.send(msg);
  }

  dispose(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }
}
