import { PlayClient } from './client';
import { FramePlayer, contextSink } from './player';
import { keyToPitch, N_KEYS, UiState } from './state';

const NOTE_NAMES = ['E4', 'F4', 'F#4', 'G4', 'G#4', 'A4', 'A#4', 'B4',
  'C5', 'C#5', 'D5', 'D#5', 'E5'];

function wsUrl(): string {
  const proto = location.protocol === 'https:' ? 'wss' : 'ws';
  return `${proto}://${location.host}/play`;
}

function render(state: UiState): void {
  const status = document.getElementById('status')!;
  const rf = state.realtimeFactor === null
    ? '' : ` · ${state.realtimeFactor.toFixed(2)}x realtime`;
  status.textContent =
    `${state.connection} · buffer ${state.bufferDepth.toFixed(1)} frames` +
    ` · ${state.underruns} underruns${rf}`;
}

function buildKeyStrip(container: HTMLElement, client: PlayClient): void {
  for (let k = 0; k < N_KEYS; k++) {
    const key = document.createElement('button');
    key.className = 'key' + (NOTE_NAMES[k].includes('#') ? ' black' : '');
    key.textContent = NOTE_NAMES[k];
    key.addEventListener('pointerdown', () => {
      const pitch = keyToPitch(k);
      if (pitch === null) return;
      client.setParam('pitch', pitch);
      (document.getElementById('pitch') as HTMLInputElement).value =
        String(pitch);
    });
    container.appendChild(key);
  }
}

function bindSlider(id: 'pitch' | 'volume' | 'instrument',
  client: PlayClient): void {
  const el = document.getElementById(id) as HTMLInputElement;
  el.addEventListener('input', () => client.setParam(id, Number(el.value)));
}

window.addEventListener('DOMContentLoaded', () => {
  let client: PlayClient | null = null;
  const startButton = document.getElementById('start')!;
  startButton.addEventListener('click', () => {
    if (client) return;
    // AudioContext must be created inside a user gesture
    const ctx = new AudioContext({ sampleRate: 16000 });
    const player = new FramePlayer(contextSink(ctx));
    client = new PlayClient(wsUrl(), player, render);
    buildKeyStrip(document.getElementById('keys')!, client);
    bindSlider('pitch', client);
    bindSlider('volume', client);
    bindSlider('instrument', client);
    client.connect();
    startButton.textContent = 'playing';
  });
});
