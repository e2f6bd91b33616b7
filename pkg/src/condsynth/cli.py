"""Command-line entry point: condsynth <command> --config cfg.json [...].

Commands: gen-corpus, train, synth, analyze, experiment, serve.  Settings
come from a JSON config file with flag overrides; every run directory gets
an echo of the effective config for reproducibility.
"""

import argparse
import json
import pickle
import sys
import time
from pathlib import Path

import numpy as np

from . import SAMPLE_RATE
from .analysis import track_f0, spectrogram, write_f0_csv, write_spectrogram_csv
from .corpus import CorpusConfig, build_corpus, trim_steady_state
from .network import NetworkDims
from .synthesis import GenerationConfig, generate, make_schedule
from .training import (AdamState, load_checkpoint, save_checkpoint, train,
                       write_loss_csv)
from .wavio import read_wav, write_wav

DEFAULTS = {
    "seed": 0,
    "out": None,
    "steps": 200,
    "batch_size": 64,
    "lr": 1e-3,
    "hidden_size": 40,
    "num_layers": 4,
    "instruments": ["even"],
    "semitones": [0],
    "n_volumes": 1,
    "noise_fraction": 0.1,
    "sequences_per_cell": 64,
    "signal_duration": 1.0,
    "wav_sources": {},  # instrument name -> wav path
    "corpus": None,  # path to a gen-corpus output
    "checkpoint": None,
    "schedule": "constant",
    "schedule_args": {},
    "duration": 1.0,
    "wav": None,  # analyze input
    "experiment": None,
    "host": "127.0.0.1",
    "port": 8765,
    "static_dir": None,  # serve the browser UI from here under /ui
}

FLAG_KEYS = ("seed", "out", "steps", "checkpoint", "duration")


class ConfigError(ValueError):
    pass


def parse_config(text, overrides=None):
    """JSON config -> dict with defaults; unknown keys rejected."""
    try:
        raw = json.loads(text) if text else {}
    except json.JSONDecodeError as e:
        raise ConfigError(f"config syntax error: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = dict(DEFAULTS)
    for key, val in raw.items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        cfg[key] = val
    for key, val in (overrides or {}).items():
        if val is not None:
            cfg[key] = val
    if cfg["steps"] < 0 or cfg["duration"] < 0:
        raise ConfigError("steps and duration must be non-negative")
    return cfg


def _out_dir(cfg, command):
    out = cfg["out"] or f"runs/{command}-{time.strftime('%Y%m%d-%H%M%S')}"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / "config.json").write_text(json.dumps(cfg, indent=2))
    return path


def _corpus_config(cfg):
    return CorpusConfig(
        instruments=list(cfg["instruments"]),
        semitones=list(cfg["semitones"]),
        n_volumes=cfg["n_volumes"],
        noise_fraction=cfg["noise_fraction"],
        sequences_per_cell=cfg["sequences_per_cell"],
        signal_duration=cfg["signal_duration"],
        seed=cfg["seed"])


def _load_sources(cfg):
    sources = {}
    for name, path in cfg["wav_sources"].items():
        sources[name] = trim_steady_state(read_wav(path))
    return sources


def cmd_gen_corpus(cfg):
    out = _out_dir(cfg, "gen-corpus")
    seqs = build_corpus(_corpus_config(cfg), _load_sources(cfg))
    with open(out / "corpus.pkl", "wb") as f:
        pickle.dump(seqs, f)
    print(f"wrote {len(seqs)} sequences to {out / 'corpus.pkl'}")
    return 0


def _get_sequences(cfg):
    if cfg["corpus"]:
        with open(cfg["corpus"], "rb") as f:
            return pickle.load(f)
    return build_corpus(_corpus_config(cfg), _load_sources(cfg))


def cmd_train(cfg):
    if cfg["corpus"] and not Path(cfg["corpus"]).exists():
        print(f"error: corpus not found: {cfg['corpus']}", file=sys.stderr)
        return 1
    sequences = _get_sequences(cfg)
    out = _out_dir(cfg, "train")
    dims = NetworkDims(4, cfg["hidden_size"], cfg["num_layers"], 256)

    def log(step, loss):
        if step % 10 == 0 or step == 1:
            print(f"step {step}  loss {loss:.4f}", flush=True)

    result = train(sequences, seed=cfg["seed"], steps=cfg["steps"],
                   batch_size=cfg["batch_size"], lr=cfg["lr"], dims=dims,
                   on_step=log)
    blob = save_checkpoint(result.weights, result.adam, step=result.steps,
                           seed=cfg["seed"], corpus_config={
                               k: cfg[k] for k in
                               ("instruments", "semitones", "n_volumes",
                                "noise_fraction")})
    (out / "checkpoint.bin").write_bytes(blob)
    write_loss_csv(out / "loss.csv", result.loss_history)
    print(f"checkpoint: {out / 'checkpoint.bin'}")
    return 0


def _load_weights(cfg):
    path = cfg["checkpoint"]
    if not path or not Path(path).exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    weights, adam, header = load_checkpoint(Path(path).read_bytes())
    return weights


def cmd_synth(cfg):
    weights = _load_weights(cfg)
    out = _out_dir(cfg, "synth")
    sched_args = dict(cfg["schedule_args"])
    sched_args.setdefault("duration", max(cfg["duration"], 0.001))
    sched = make_schedule(cfg["schedule"], **sched_args)
    n = int(round(cfg["duration"] * SAMPLE_RATE))
    result = generate(weights, sched, GenerationConfig(total_samples=n))
    write_wav(out / "synth.wav", result.signal)
    result.codes.astype("<i2").tofile(out / "codes.bin")
    print(f"generated {n} samples at {result.samples_per_second:.0f} samples/s "
          f"-> {out / 'synth.wav'}")
    return 0


def cmd_analyze(cfg):
    if not cfg["wav"] or not Path(cfg["wav"]).exists():
        print(f"error: wav not found: {cfg['wav']}", file=sys.stderr)
        return 1
    sig = read_wav(cfg["wav"])
    out = _out_dir(cfg, "analyze")
    write_f0_csv(out / "f0.csv", track_f0(sig))
    write_spectrogram_csv(out / "spectrogram.csv", spectrogram(sig))
    print(f"analysis written to {out}")
    return 0


def cmd_experiment(cfg):
    from . import experiments

    name = cfg["experiment"]
    runners = {"overfit": experiments.run_overfit,
               "fig4-synthetic": experiments.run_interpolation,
               "fig5-arpeggio": experiments.run_responsiveness,
               "no-drift": experiments.run_no_drift}
    if name not in runners:
        print(f"error: unknown experiment {name!r}; choose from "
              f"{sorted(runners)}", file=sys.stderr)
        return 1
    out = _out_dir(cfg, f"experiment-{name}")
    report = runners[name](seed=cfg["seed"], steps=cfg["steps"] or None,
                           out_dir=out)
    (out / "report.json").write_text(json.dumps(report, indent=2))
    for key, val in report["metrics"].items():
        print(f"{key}: {val}")
    print(f"PASS" if report["passed"] else "FAIL", flush=True)
    return 0 if report["passed"] else 1


def cmd_serve(cfg):
    import uvicorn

    from .playserver import create_app

    app = create_app(Path(cfg["checkpoint"]).read_bytes(),
                     static_dir=cfg["static_dir"])
    uvicorn.run(app, host=cfg["host"], port=cfg["port"])
    return 0


COMMANDS = {"gen-corpus": cmd_gen_corpus, "train": cmd_train,
            "synth": cmd_synth, "analyze": cmd_analyze,
            "experiment": cmd_experiment, "serve": cmd_serve}


def main(argv=None):
    ap = argparse.ArgumentParser(prog="condsynth")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    ap.add_argument("--steps", type=int)
    ap.add_argument("--checkpoint")
    ap.add_argument("--duration", type=float)
    args = ap.parse_args(argv)
    text = Path(args.config).read_text() if args.config else "{}"
    try:
        cfg = parse_config(text, {k: getattr(args, k.replace("-", "_"))
                                  for k in FLAG_KEYS})
        return COMMANDS[args.command](cfg)
    except (ConfigError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
