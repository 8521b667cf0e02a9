import json

import numpy as np
import pytest

from genredream.audio import PcmWave, read_wav, write_wav
from genredream.checkpoint import checkpoint_load, checkpoint_save
from genredream.cli import epoch_log_path, main
from genredream.genre_net import GENRES, init_parameters
from genredream.synthetic import TONE_FREQUENCIES


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    rng = np.random.default_rng(0)
    rows = []
    for genre, freq in zip(GENRES, TONE_FREQUENCIES):
        t = np.arange(16000 * 10) / 16000
        x = 12000 * np.sin(2 * np.pi * freq * t) + rng.normal(0, 300, t.size)
        write_wav(root / f"{genre}.wav", PcmWave(16000, np.round(x)[None, :]))
        rows.append(f"{genre}.wav,{genre}")
    manifest = root / "manifest.csv"
    manifest.write_text("path,genre\n" + "\n".join(rows) + "\n", encoding="utf-8")
    return root, manifest


@pytest.fixture(scope="module")
def model(tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "net.gnet"
    checkpoint_save(init_parameters(0), path)
    return path


def test_train_writes_checkpoint_and_log(corpus, tmp_path, capsys):
    _, manifest = corpus
    out = tmp_path / "trained.gnet"
    code = main(["train", "--manifest", str(manifest), "--out", str(out), "--epochs", "2", "--batch-size", "4"])
    assert code == 0
    assert checkpoint_load(out).arch.input_length == 40000
    log = epoch_log_path(out).read_text(encoding="utf-8").splitlines()
    assert log[0] == "epoch,loss,seconds" and len(log) == 3


def test_train_defaults_to_twenty_epochs():
    from genredream.cli import build_parser

    args = build_parser().parse_args(["train", "--manifest", "m", "--out", "o"])
    assert (args.epochs, args.batch_size, args.lr, args.momentum) == (20, 32, 0.01, 0.9)


def test_eval_lists_genres_in_order(corpus, model, capsys):
    _, manifest = corpus
    assert main(["eval", "--manifest", str(manifest), "--model", str(model)]) == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert [line.split()[0] for line in lines[:5]] == list(GENRES)
    payload = json.loads(out[out.index("{") :])
    assert np.array(payload["confusion"]).sum() == 10


def test_dream_processes_first_clip(corpus, model, tmp_path, capsys):
    root, _ = corpus
    out, trace = tmp_path / "dream.wav", tmp_path / "trace.csv"
    code = main(
        ["dream", "--model", str(model), "--in", str(root / "rap.wav"), "--out", str(out),
         "--layers", "1,3", "--steps", "3", "--trace", str(trace)]
    )
    assert code == 0
    assert "processing the first only" in capsys.readouterr().err
    wave = read_wav(out)
    assert wave.sample_rate == 8000 and wave.channels == 1 and wave.frames == 40000
    assert np.abs(wave.samples).max() == 31129
    rows = trace.read_text(encoding="utf-8").splitlines()
    assert rows[0] == "step,objective" and len(rows) == 5


def test_dream_without_normalization(corpus, model, tmp_path):
    root, _ = corpus
    out = tmp_path / "plain.wav"
    args = ["dream", "--model", str(model), "--in", str(root / "pop.wav"), "--out", str(out),
            "--steps", "1", "--step-size", "1e-4", "--no-grad-norm", "--layers", "all"]
    assert main(args) == 0 and out.exists()


def test_inspect(model, capsys):
    assert main(["inspect", "--model", str(model)]) == 0
    out = capsys.readouterr().out
    assert "5000 frames" in out and "622 frames" in out and "62 frames" in out
    assert f"trainable parameters: {init_parameters(0).num_parameters()}" in out


def test_unknown_subcommand_and_flag(capsys):
    assert main(["fly"]) != 0
    assert "usage" in capsys.readouterr().err
    assert main(["inspect", "--model", "x", "--bogus"]) != 0
    assert "usage" in capsys.readouterr().err


def test_operational_errors_exit_nonzero(tmp_path, model, capsys):
    assert main(["inspect", "--model", str(tmp_path / "nope.gnet")]) == 1
    bad = tmp_path / "bad.gnet"
    bad.write_bytes(b"XNET\x01\x00\x00\x00")
    assert main(["inspect", "--model", str(bad)]) == 1
    short = tmp_path / "short.wav"
    write_wav(short, PcmWave(8000, np.zeros((1, 100), dtype=int)))
    assert main(["dream", "--model", str(model), "--in", str(short), "--out", str(tmp_path / "o.wav")]) == 1
    assert main(["dream", "--model", str(model), "--in", str(short), "--out", "o.wav", "--layers", "9"]) == 1
    err = capsys.readouterr().err
    assert "genredream inspect" in err and "genredream dream" in err
