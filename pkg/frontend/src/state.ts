export interface ParamPoint {
  pitch: number;
  volume: number;
  instrument: number;
}

export type ConnectionStatus = 'disconnected' | 'connecting' | 'connected';

export interface UiState {
  connection: ConnectionStatus;
  params: ParamPoint;
  bufferDepth: number; // frames queued for playback
  realtimeFactor: number | null; // latest server-reported value
  underruns: number;
}

export const N_KEYS = 13; // one chromatic octave, E4..E5

export function initialState(): UiState {
  return {
    connection: 'disconnected',
    params: { pitch: 0, volume: 1, instrument: 0 },
    bufferDepth: 0,
    realtimeFactor: null,
    underruns: 0,
  };
}

export function clamp01(x: number): number {
  return Math.min(1, Math.max(0, x));
}

/** Key index on the chromatic strip -> pitch parameter (k/12). */
export function keyToPitch(key: number): number | null {
  if (!Number.isInteger(key) || key < 0 || key >= N_KEYS) {
    return null; // out-of-range presses are ignored
  }
  return key / 12;
}

export function setParam(
  state: UiState,
  field: keyof ParamPoint,
  value: number,
): UiState {
  return {
    ...state,
    params: { ...state.params, [field]: clamp01(value) },
  };
}
