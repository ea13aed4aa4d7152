import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import paint2music as p2m

FIXTURES = Path(os.environ.get("P2M_FIXTURE_DIR", Path(__file__).resolve().parents[2] / "tests" / "fixtures"))


def test_emotions_and_version():
    assert p2m.EMOTIONS == ("happy", "angry", "sad", "fun", "neutral")
    assert p2m.__version__.count(".") == 2


def test_help_and_usage_exit_codes():
    code, out, _ = p2m.run_cli(["--help"])
    assert code == 0
    assert "curate" in out
    code, _, err = p2m.run_cli(["no-such-command"])
    assert code == 1
    assert err


def test_fad_matches_closed_form():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(400, 3))
    assert p2m.fad(a, a) == pytest.approx(0.0, abs=1e-6)
    shifted = a + np.array([1.0, 0.0, 0.0])
    assert p2m.fad(a, shifted) == pytest.approx(1.0, abs=1e-6)


def test_kl_and_inception_score():
    p = np.array([0.5, 0.5])
    q = np.array([0.9, 0.1])
    assert p2m.kl(p, q) == pytest.approx(0.5 * math.log(0.5 / 0.9) + 0.5 * math.log(0.5 / 0.1))
    rows = np.eye(4)
    assert p2m.inception_score(rows) == pytest.approx(4.0)
    assert p2m.kl_divergence(rows, rows) == pytest.approx(0.0, abs=1e-9)


def test_clap_score_is_mean_cosine():
    t = np.array([[1.0, 0.0], [0.0, 2.0]])
    a = np.array([[1.0, 0.0], [1.0, 0.0]])
    assert p2m.clap_score(t, a) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        p2m.clap_score(t, a[:1])


def test_thd_pure_tone_and_silence():
    sr = 32000
    t = np.arange(sr) / sr
    assert p2m.thd(np.sin(2 * math.pi * 440.0 * t), sr) < 1e-3
    with pytest.raises(ValueError):
        p2m.thd(np.zeros(sr), sr)


def test_curate_through_bindings(tmp_path):
    code, _, err = p2m.run_cli(
        ["--seed", "7", "--log-level", "error", "curate",
         "--paintings", str(FIXTURES / "paintings"), "--midi", str(FIXTURES / "midi"),
         "--out", str(tmp_path / "data")]
    )
    assert code == 0, err
    manifest = json.loads((tmp_path / "data" / "manifest.json").read_text())
    assert len(manifest["samples"]) == 10
    wav = tmp_path / "data" / manifest["samples"][0]["audio_path"]
    assert len(p2m.sha256_file(wav)) == 64


def test_missing_checkpoint_raises():
    with pytest.raises(OSError):
        p2m.predict_emotion("/nonexistent/emotion.ckpt", FIXTURES / "paintings" / "sad_01.png")
