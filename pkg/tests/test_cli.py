import hashlib

import numpy as np
import pytest

from wavegen.audio import Waveform, save_wav, write_manifest
from wavegen.cli import main
from wavegen.training import EvalReport, parse_config


def sine_file(path, seconds=2.0, freq=440.0, rate=16000):
    t = np.arange(int(seconds * rate)) / rate
    save_wav(path, Waveform(0.5 * np.sin(2 * np.pi * freq * t), rate))
    return path


@pytest.fixture
def corpus(tmp_path):
    d = tmp_path / "corpus"
    d.mkdir()
    train = [sine_file(d / "a.wav"), sine_file(d / "b.wav", freq=330.0)]
    test = [sine_file(d / "c.wav", freq=550.0)]
    write_manifest(d / "manifest.txt", train, test)
    return d


def digest(d):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(d.glob("*.wav"))}


def test_prepare_counts_and_cache_hit(corpus, tmp_path, capsys):
    args = ["prepare", "--manifest", str(corpus / "manifest.txt"), "--cache", str(tmp_path / "cache"),
            "--out", str(tmp_path / "run")]
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "train: tracks=2" in out and "windows=76" in out  # 38 per 2-second file
    assert "test: tracks=1" in out and "windows=38" in out
    assert (tmp_path / "run" / "config.resolved").is_file()
    assert main(args) == 0
    assert "cache hit" in capsys.readouterr().out


def test_prepare_empty_manifest(tmp_path, capsys):
    (tmp_path / "m.txt").write_text("# nothing\n")
    assert main(["prepare", "--manifest", str(tmp_path / "m.txt"), "--out", str(tmp_path / "r")]) != 0
    err = capsys.readouterr().err
    assert "warning" in err and "no files" in err


def test_prepare_skips_missing_and_fails_when_all_missing(corpus, tmp_path, capsys):
    m = corpus / "partial.txt"
    m.write_text(f"train {corpus / 'a.wav'}\ntrain {corpus / 'nope.wav'}\n")
    assert main(["prepare", "--manifest", str(m), "--cache", str(tmp_path / "c1"), "--out", str(tmp_path / "r")]) == 0
    assert "nope.wav" in capsys.readouterr().err
    bad = corpus / "bad.txt"
    bad.write_text("train missing1.wav\ntest missing2.wav\n")
    assert main(["prepare", "--manifest", str(bad), "--cache", str(tmp_path / "c2"), "--out", str(tmp_path / "r")]) == 1
    err = capsys.readouterr().err
    assert "missing1.wav" in err and "missing2.wav" in err


def test_unknown_model_is_usage_error(corpus, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--manifest", str(corpus / "manifest.txt"), "--model", "xf-12"])
    assert exc.value.code == 2
    err = capsys.readouterr().err
    for kind in ("wavenet-vanilla", "wavenet-stacked", "xf-3", "xf-3-cond", "xf-6", "xf-8", "custom"):
        assert kind in err


@pytest.mark.parametrize("argv", [
    ["generate", "--checkpoint", "x.wvg", "--temperature", "0"],
    ["generate", "--checkpoint", "x.wvg", "--temperature", "hot"],
    ["generate", "--checkpoint", "x.wvg", "--n-samples", "-3"],
    ["generate"],
    ["eval", "--checkpoint", "x.wvg"],
    ["train", "--scheme", "a_law", "--manifest", "m.txt"],
])
def test_bad_flags_fail_before_compute(argv, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(argv + ["--out", str(tmp_path / "never")])
    assert exc.value.code == 2
    assert not (tmp_path / "never").exists()


def test_full_pipeline(corpus, tmp_path, capsys):
    before = digest(corpus)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"manifest={corpus / 'manifest.txt'}\ncache={tmp_path / 'cache'}\n"
        "context=32\nstride=1600\nbatch_size=4\nmax_epochs=1\nmodel.layers=1\nmodel.heads=2\n"
        "model.embed_dim=8\nmodel.ff_width=8\nseed=5\nmodel=xf-6\n"
    )
    # flags win over the config file
    a = tmp_path / "a"
    assert main(["train", "--config", str(cfg), "--model", "xf-3", "--out", str(a), "--max-steps", "3"]) == 0
    resolved = parse_config((a / "config.resolved").read_text())
    assert resolved["model"] == "xf-3" and resolved["max_steps"] == "3" and resolved["seed"] == "5"
    assert (a / "loss_curve.txt").read_text().startswith("# step")
    b = tmp_path / "b"
    assert main(["train", "--config", str(cfg), "--out", str(b), "--max-steps", "2", "--seed", "1"]) == 0
    capsys.readouterr()

    ev = tmp_path / "ev"
    assert main(["eval", "--config", str(cfg), "--checkpoint", str(a / "checkpoint.wvg"), str(b / "checkpoint.wvg"),
                 "--out", str(ev)]) == 0
    table = [line for line in capsys.readouterr().out.splitlines() if line.startswith("|")]
    assert len(table) == 4 and "1-Layer Transformer: H = 2, E = 8" in table[2]
    assert "1-Layer Transformer: H = 2, E = 8" in table[3]
    blocks = (ev / "report.txt").read_text().split("\n\n")
    reports = [EvalReport.from_text(b_) for b_ in blocks if b_.strip()]
    assert len(reports) == 2 and all(0 <= r.top5_accuracy <= 1 for r in reports)

    gen = tmp_path / "gen"
    assert main(["generate", "--checkpoint", str(a / "checkpoint.wvg"), "--n-samples", "12",
                 "--seed", "3", "--out", str(gen)]) == 0
    resolved = parse_config((gen / "config.resolved").read_text())
    assert resolved["temperature"] == "1.0"
    levels = (gen / "generated.levels.txt").read_text().split()
    assert len(levels) == 32 + 12 and all(0 <= int(v) <= 255 for v in levels)
    first = (gen / "generated.levels.txt").read_text()
    assert main(["generate", "--checkpoint", str(a / "checkpoint.wvg"), "--n-samples", "12",
                 "--seed", "3", "--out", str(gen)]) == 0
    assert (gen / "generated.levels.txt").read_text() == first
    assert digest(corpus) == before


def test_eval_scheme_mismatch(corpus, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"manifest={corpus / 'manifest.txt'}\ncache={tmp_path / 'cache'}\ncontext=16\n"
                   "model.layers=1\nmodel.heads=2\nmodel.embed_dim=8\nmodel.ff_width=8\nmax_steps=1\n")
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    code = main(["eval", "--config", str(cfg), "--scheme", "mu_law",
                 "--checkpoint", str(tmp_path / "a" / "checkpoint.wvg"), "--out", str(tmp_path / "e")])
    assert code == 1
    assert "linear" in capsys.readouterr().err
