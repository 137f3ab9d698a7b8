"""``wavegen`` command line: prepare, train, eval, generate.

Settings come from built-in defaults, then an optional ``key=value``
config file (``--config``), then command-line flags; later sources win.
Every command writes the merged settings to ``<out>/config.resolved``.
The BLAS/worker thread count is read from ``WAVEGEN_THREADS`` only.
"""
from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

from .audio import (
    WORKING_RATE,
    WindowSet,
    load_audio,
    quantize,
    read_manifest,
    read_shard,
    resample,
    write_shard,
)
from .audio.quantize import SCHEMES
from .exceptions import WavegenError
from .models import MODEL_KINDS, build_network
from .synthesis import GenerationSpec, generate, write_generation
from .training import (
    EvalReport,
    TrainPlan,
    evaluate,
    format_config,
    format_table,
    load_network,
    parse_config,
    save_network,
    train,
)

DEFAULTS: dict[str, str] = {
    "manifest": "",
    "cache": "",
    "out": "run",
    "model": "xf-3",
    "scheme": "linear",
    "seed": "0",
    "context": "1600",
    "stride": "800",
    "batch_size": "32",
    "lr_stages": "1e-4,1e-5,1e-6",
    "warm_epochs": "10",
    "max_epochs": "30",
    "max_steps": "",
    "micro_batch": "",
    "plateau_window": "2",
    "val_fraction": "0.05",
    "eval_every": "",
    "augment": "false",
    "eval_windows": "",
    "checkpoint": "",
    "temperature": "1.0",
    "n_samples": "16000",
    "seed_source": "noise",
}

# flag dest -> config key
FLAG_KEYS = {"model": "model", "scheme": "scheme", "seed": "seed", "temperature": "temperature",
             "n_samples": "n_samples", "out": "out", "manifest": "manifest", "cache": "cache",
             "max_steps": "max_steps", "seed_source": "seed_source"}


class UsageError(Exception):
    pass


def _opt_int(v: str) -> int | None:
    return int(v) if v.strip() else None


def resolve(args: argparse.Namespace) -> dict[str, str]:
    cfg = dict(DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file {path} not found")
        cfg.update(parse_config(path.read_text()))
    for dest, key in FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            cfg[key] = str(value)
    if getattr(args, "checkpoint", None):
        cfg["checkpoint"] = ",".join(args.checkpoint)
    return cfg


def validate(cfg: dict[str, str], command: str) -> None:
    """Reject bad settings before any compute happens."""
    if cfg["model"] not in MODEL_KINDS:
        raise UsageError(f"unknown model kind {cfg['model']!r}; valid kinds: {', '.join(MODEL_KINDS)}")
    if cfg["scheme"] not in SCHEMES:
        raise UsageError(f"unknown scheme {cfg['scheme']!r}; valid schemes: {', '.join(SCHEMES)}")
    try:
        int(cfg["seed"])
        int(cfg["context"])
        int(cfg["stride"])
        int(cfg["n_samples"])
        _opt_int(cfg["max_steps"])
        _opt_int(cfg["eval_windows"])
        temperature(cfg)
    except ValueError as exc:
        raise UsageError(f"bad setting: {exc}") from None
    if int(cfg["n_samples"]) < 0:
        raise UsageError("--n-samples must be >= 0")
    if command == "prepare" and not cfg["manifest"]:
        raise UsageError("prepare needs a manifest (--manifest or manifest= in the config)")
    if command == "train" and not (cfg["manifest"] or cfg["cache"]):
        raise UsageError("train needs a manifest or a prepared cache")
    if command in ("eval", "generate") and not cfg["checkpoint"]:
        raise UsageError(f"{command} needs --checkpoint")
    if command == "generate" and "," in cfg["checkpoint"]:
        raise UsageError("generate takes exactly one checkpoint")
    if command == "eval" and not (cfg["manifest"] or cfg["cache"]):
        raise UsageError("eval needs a manifest or a prepared cache")


def temperature(cfg: dict[str, str]) -> float | None:
    raw = cfg["temperature"].strip().lower()
    if raw == "argmax":
        return None
    t = float(raw)
    if not t > 0:
        raise ValueError(f"temperature must be > 0 or 'argmax', got {raw}")
    return t


def write_resolved(cfg: dict[str, str], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved").write_text(format_config(cfg))


def cache_dir(cfg: dict[str, str]) -> Path:
    if cfg["cache"]:
        return Path(cfg["cache"])
    return Path(cfg["manifest"]).resolve().parent / ".wavegen-cache"


def _cache_key(manifest_path: Path, scheme: str, entries) -> str:
    h = hashlib.sha256()
    h.update(manifest_path.read_bytes())
    h.update(f"scheme={scheme};rate={WORKING_RATE}".encode())
    for p in entries:
        try:
            st = p.stat()
            h.update(f"{p}:{st.st_size}:{st.st_mtime_ns}".encode())
        except OSError:
            h.update(f"{p}:missing".encode())
    return h.hexdigest()


def prepare(cfg: dict[str, str]) -> tuple[Path, bool]:
    """Resample and quantize every manifest entry into per-split shards.

    Returns the cache directory and whether it was already up to date.
    """
    manifest_path = Path(cfg["manifest"])
    if not manifest_path.is_file():
        raise UsageError(f"manifest {manifest_path} not found")
    scheme = cfg["scheme"]
    manifest = read_manifest(manifest_path)
    root = cache_dir(cfg) / scheme
    key = _cache_key(manifest_path, scheme, manifest.train + manifest.test)
    key_file = root / "key.txt"
    if key_file.is_file() and key_file.read_text().strip() == key:
        print(f"cache hit: {root}")
        return root, True
    if len(manifest) == 0:
        print(f"warning: manifest {manifest_path} lists no files", file=sys.stderr)
        raise WavegenError("nothing to prepare; no shards written")
    root.mkdir(parents=True, exist_ok=True)
    totals = {}
    failures = []
    for split, paths in (("train", manifest.train), ("test", manifest.test)):
        seqs = []
        for p in paths:
            try:
                w = resample(load_audio(p), WORKING_RATE)
            except (OSError, WavegenError) as exc:
                failures.append(f"{p}: {exc}")
                continue
            seqs.append(quantize(w.samples, scheme).astype(np.uint8))
        write_shard(root / f"{split}.shard", seqs)
        n = sum(len(s) for s in seqs)
        windows = len(WindowSet.from_sequences(seqs, int(cfg["context"]), int(cfg["stride"]), 0, scheme))
        totals[split] = (len(seqs), n / WORKING_RATE / 3600, windows)
    for f in failures:
        print(f"skipped {f}", file=sys.stderr)
    if len(failures) == len(manifest):
        raise WavegenError("every file in the manifest failed to load")
    lines = []
    for split, (tracks, hours, windows) in totals.items():
        lines.append(f"{split}: tracks={tracks} hours={hours:.4f} windows={windows}")
    (root / "stats.txt").write_text("\n".join(lines) + "\n")
    key_file.write_text(key + "\n")
    print("\n".join(lines))
    return root, False


def load_split(cfg: dict[str, str], split: str) -> list[np.ndarray]:
    root = cache_dir(cfg) / cfg["scheme"]
    if cfg["manifest"]:
        root, _ = prepare(cfg)
    shard = root / f"{split}.shard"
    if not shard.is_file():
        raise WavegenError(f"no prepared {split} data at {shard}; run `wavegen prepare` first")
    return read_shard(shard)


def plan_from(cfg: dict[str, str]) -> TrainPlan:
    return TrainPlan(
        batch_size=int(cfg["batch_size"]),
        lr_stages=tuple(float(x) for x in cfg["lr_stages"].split(",") if x.strip()),
        warm_epochs=int(cfg["warm_epochs"]),
        max_epochs=int(cfg["max_epochs"]),
        plateau_window=int(cfg["plateau_window"]),
        seed=int(cfg["seed"]),
        max_steps=_opt_int(cfg["max_steps"]),
        micro_batch=_opt_int(cfg["micro_batch"]),
        val_fraction=float(cfg["val_fraction"]),
        eval_every=_opt_int(cfg["eval_every"]),
        augment=cfg["augment"].lower() == "true",
    )


def model_options(cfg: dict[str, str]) -> dict:
    """``model.<field>=value`` entries as typed overrides for :func:`build_network`."""
    opts: dict = {"context": int(cfg["context"])}
    for key, value in cfg.items():
        if key.startswith("model."):
            name = key[len("model."):]
            low = value.lower()
            if low in ("true", "false"):
                opts[name] = low == "true"
            else:
                try:
                    opts[name] = int(value)
                except ValueError:
                    try:
                        opts[name] = float(value)
                    except ValueError:
                        opts[name] = value
    return opts


def cmd_prepare(cfg: dict[str, str]) -> int:
    out = Path(cfg["out"])
    write_resolved(cfg, out)
    prepare(cfg)
    return 0


def cmd_train(cfg: dict[str, str]) -> int:
    out = Path(cfg["out"])
    plan = plan_from(cfg)
    net = build_network(cfg["model"], seed=int(cfg["seed"]), scheme=cfg["scheme"], **model_options(cfg))
    write_resolved(cfg, out)
    seqs = load_split(cfg, "train")
    windows = WindowSet.from_sequences(seqs, net.context, int(cfg["stride"]), net.past_len, cfg["scheme"])
    print(f"training {net.label} on {len(windows)} windows")
    curve = out / "loss_curve.txt"
    if curve.exists():
        curve.unlink()
    result = train(net, windows, plan, curve_path=curve)
    ckpt = save_network(net, out / "checkpoint.wvg", {"preset": cfg["model"], "train.seed": cfg["seed"]})
    print(f"{result.steps} steps, {result.epochs} epochs ({result.stop_reason}); checkpoint {ckpt}")
    return 0


def cmd_eval(cfg: dict[str, str]) -> int:
    out = Path(cfg["out"])
    write_resolved(cfg, out)
    seqs = load_split(cfg, "test")
    if not seqs:
        raise WavegenError("the test split is empty")
    reports: list[EvalReport] = []
    for path in cfg["checkpoint"].split(","):
        net = load_network(path)
        windows = WindowSet.from_sequences(seqs, net.context, int(cfg["stride"]), net.past_len, cfg["scheme"])
        rep = evaluate(net, windows, max_windows=_opt_int(cfg["eval_windows"]),
                       rng=np.random.default_rng(int(cfg["seed"])))
        reports.append(rep)
    (out / "report.txt").write_text("\n".join(r.to_text() for r in reports))
    table = format_table(reports)
    (out / "report.md").write_text(table)
    print(table, end="")
    return 0


def cmd_generate(cfg: dict[str, str]) -> int:
    out = Path(cfg["out"])
    net = load_network(cfg["checkpoint"])
    spec = GenerationSpec(int(cfg["n_samples"]), cfg["seed_source"], temperature(cfg), int(cfg["seed"]),
                          seed_length=net.context)
    write_resolved(cfg, out)
    gen = generate(net, spec)
    wav, levels = write_generation(gen, out / "generated.wav")
    print(f"wrote {wav} and {levels}")
    return 0


COMMANDS = {"prepare": cmd_prepare, "train": cmd_train, "eval": cmd_eval, "generate": cmd_generate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavegen", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value settings file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--scheme", help=f"quantization scheme ({', '.join(SCHEMES)})")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--cache", help="prepared-data cache directory")
        p.add_argument("--manifest", help="corpus manifest")

    p = sub.add_parser("prepare", help="resample, quantize and shard a corpus")
    common(p)
    p = sub.add_parser("train", help="train a model")
    common(p)
    p.add_argument("--model", help=f"model kind ({', '.join(MODEL_KINDS)})")
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p = sub.add_parser("eval", help="score checkpoints on the test split")
    common(p)
    p.add_argument("--checkpoint", nargs="+")
    p.add_argument("--model", help=argparse.SUPPRESS)
    p = sub.add_parser("generate", help="sample audio from a checkpoint")
    common(p)
    p.add_argument("--checkpoint", nargs=1)
    p.add_argument("--model", help=argparse.SUPPRESS)
    p.add_argument("--temperature", help="sampling temperature > 0, or 'argmax' (default 1.0)")
    p.add_argument("--n-samples", dest="n_samples", type=int, help="levels to generate (default 16000)")
    p.add_argument("--seed-source", dest="seed_source", help="noise, silence or a path to an audio snippet")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        validate(cfg, args.command)
    except UsageError as exc:
        parser.error(str(exc))
    try:
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        parser.error(str(exc))
    except WavegenError as exc:
        print(f"wavegen {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
