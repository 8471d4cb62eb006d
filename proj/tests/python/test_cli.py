# Copyright 2026 The latent-lens Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


import csv
import json
import os
import subprocess

import pytest

CLI = os.environ.get("LATENT_LENS_CLI")

pytestmark = pytest.mark.skipif(not CLI, reason="LATENT_LENS_CLI not set")


def run(*args, check=True):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(proc.stderr)
    return proc


def test_pipeline(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    run("gen", "--kind", "musical", "--n", 120, "--seed", 3, "--out", corpus)
    assert len(corpus.read_text().splitlines()) == 120
    manifest = json.loads((tmp_path / "corpus.jsonl.manifest.json").read_text())
    assert manifest["command"] == "gen"

    cfg = tmp_path / "train.cfg"
    cfg.write_text("# small model\nepochs=2\nbatch=16\nlatent-dim=4\nhidden-dim=16\nembed-dim=8\n")
    model_dir = tmp_path / "model"
    run("train", "--corpus", corpus, "--out-dir", model_dir, "--config", cfg)
    with open(model_dir / "history.csv") as f:
        rows = list(csv.DictReader(f))
    assert [r["epoch"] for r in rows] == ["1", "2"]

    run("train", "--corpus", corpus, "--out-dir", model_dir, "--config", cfg,
        "--resume", model_dir / "model.ckpt", "--epochs", 3)
    with open(model_dir / "history.csv") as f:
        assert [r["epoch"] for r in csv.DictReader(f)] == ["1", "2", "3", "4", "5"]

    out = tmp_path / "analysis"
    run("analyze", "--checkpoint", model_dir / "model.ckpt", "--corpus", corpus, "--out-dir", out)
    assert (out / "feature_phik.csv").exists()
    assert (out / "sigma_boxplot.svg").read_text().rstrip().endswith("</svg>")


def test_exit_codes(tmp_path):
    assert run("gen", "--kind", "nope", "--n", 1, "--out", tmp_path / "x", check=False).returncode == 1
    assert run("analyze", "--checkpoint", tmp_path / "missing.ckpt", "--corpus", tmp_path / "c",
               "--out-dir", tmp_path / "o", check=False).returncode == 1

    corpus = tmp_path / "c.jsonl"
    run("gen", "--kind", "random", "--n", 40, "--seed", 1, "--out", corpus)
    proc = run("train", "--corpus", corpus, "--out-dir", tmp_path / "m", "--epochs", 1,
               "--latent-dim", 4, "--hidden-dim", 8, "--embed-dim", 8, "--lr", "1e200", check=False)
    assert proc.returncode == 2
