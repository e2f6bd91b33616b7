import { FramePlayer } from './player';
import { ParamSender, ParamMessage } from './params';
import { UiState, initialState } from './state';

export interface ServerStatus {
  realtime_factor?: number;
  frames_sent?: number;
  ok?: boolean;
  error?: string;
}

/**
 * Owns the websocket, a FramePlayer for the audio leg and a ParamSender for
 * the control leg; surfaces a UiState snapshot for rendering.
 */
export class PlayClient {
  state: UiState = initialState();
  readonly sender: ParamSender;
  private ws: WebSocket | null = null;

  constructor(
    private url: string,
    private player: FramePlayer,
    private onChange: (state: UiState) => void,
  ) {
    this.sender = new ParamSender(
      (msg) => this.sendMessage(msg),
      () => this.state.connection === 'connected',
    );
  }

  connect(): void {
    this.state = { ...this.state, connection: 'connecting' };
    this.onChange(this.state);
    const ws = new WebSocket(this.url);
    ws.binaryType = 'arraybuffer';
    ws.onopen = () => {
      this.state = { ...this.state, connection: 'connected' };
      this.onChange(this.state);
    };
    ws.onclose = () => {
      this.state = { ...this.state, connection: 'disconnected' };
      this.onChange(this.state);
    };
    ws.onmessage = (ev) => {
      if (ev.data instanceof ArrayBuffer) {
        this.player.onFrame(ev.data);
        this.state = {
          ...this.state,
          bufferDepth: this.player.bufferDepth,
          underruns: this.player.underruns,
        };
      } else {
        const status: ServerStatus = JSON.parse(ev.data);
        if (status.realtime_factor !== undefined) {
          this.state = { ...this.state, realtimeFactor: status.realtime_factor };
        }
        if (status.error) console.warn('server rejected params:', status.error);
      }
      this.onChange(this.state);
    };
    this.ws = ws;
  }

  setParam(field: 'pitch' | 'volume' | 'instrument', value: number): void {
    this.state = {
      ...this.state,
      params: { ...this.state.params, [field]: Math.min(1, Math.max(0, value)) },
    };
    this.sender.update(field, value);
    this.onChange(this.state);
  }

  private sendMessage(msg: ParamMessage): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(JSON.stringify(msg));
    }
  }

  close(): void {
    this.sender.dispose();
    this.ws?.close();
  }
}
