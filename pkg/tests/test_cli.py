"""Batch front end: config precedence, exit codes, reproducible output."""

import json

import numpy as np
import pytest

from pixelboost import (STREAM_DATASET, RngStream, build_schedule,
                        load_checkpoint, make_lr_pair, read_image,
                        synth_dataset, write_image)
from pixelboost.cli import SEED_ENV, RunConfig, main


def _make_image(path, seed=0, size=16, kind="mixed"):
    img = synth_dataset(kind, 1, size, RngStream(seed, STREAM_DATASET))[0]
    write_image(img, path)
    return read_image(path)


def _residual_file(path, n=640, seed=0):
    sample = 1.5 * RngStream(seed, 5).standard_normal(n)
    path.write_bytes(sample.astype("<f8").tobytes())
    return path


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)


class TestParsing:
    def test_no_command_is_usage_error(self, capsys):
        assert main([]) == 2
        assert "usage" in capsys.readouterr().err

    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_help_exits_cleanly(self, capsys):
        assert main(["--help"]) == 0
        assert "schedule" in capsys.readouterr().out

    def test_bad_choice(self, capsys):
        assert main(["schedule", "--mode", "bogus"]) == 2

    def test_bad_sigmas(self, tmp_path, capsys):
        assert main(["sweep", "--sigmas", "a,b",
                     "--out", str(tmp_path / "x.csv")]) == 2

    def test_empty_sigmas(self, tmp_path, capsys):
        assert main(["sweep", "--sigmas", ",",
                     "--out", str(tmp_path / "x.csv")]) == 2


class TestConfigPrecedence:
    def _analyze(self, tmp_path, extra, tag):
        sample = tmp_path / "resid.f64"
        if not sample.exists():
            _residual_file(sample)
        out = tmp_path / f"{tag}.csv"
        argv = ["analyze-noise", "--input", str(sample), "--bins", "8",
                "--out", str(out)] + extra
        assert main(argv) == 0
        return out.read_bytes()

    def test_flag_beats_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 2}))
        with_flag = self._analyze(tmp_path, ["--seed", "1",
                                             "--config", str(cfg)], "a")
        plain = self._analyze(tmp_path, ["--seed", "1"], "b")
        from_cfg = self._analyze(tmp_path, ["--config", str(cfg)], "c")
        assert with_flag == plain
        assert with_flag != from_cfg

    def test_config_beats_env(self, tmp_path, monkeypatch):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 2}))
        monkeypatch.setenv(SEED_ENV, "3")
        got = self._analyze(tmp_path, ["--config", str(cfg)], "a")
        monkeypatch.delenv(SEED_ENV)
        assert got == self._analyze(tmp_path, ["--seed", "2"], "b")

    def test_env_beats_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv(SEED_ENV, "7")
        from_env = self._analyze(tmp_path, [], "a")
        monkeypatch.delenv(SEED_ENV)
        assert from_env == self._analyze(tmp_path, ["--seed", "7"], "b")
        assert from_env != self._analyze(tmp_path, [], "c")

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 1, "sigma_typo": 2.0}))
        assert main(["schedule", "--config", str(cfg)]) == 2
        assert "sigma_typo" in capsys.readouterr().err

    def test_malformed_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        assert main(["schedule", "--config", str(cfg)]) == 2

    def test_non_object_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1, 2]")
        assert main(["schedule", "--config", str(cfg)]) == 2

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["schedule", "--config", str(tmp_path / "no.json")]) == 2

    def test_bad_env_seed(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(SEED_ENV, "not-a-number")
        assert main(["schedule", "--out", str(tmp_path / "s.csv")]) == 2

    def test_defaults_document_the_surface(self):
        cfg = RunConfig()
        assert cfg.steps == 15 and cfg.sigma == 1.5
        assert cfg.mode == "normalized" and cfg.seed == 0


class TestSchedule:
    def test_stdout_matches_library(self, capsys):
        assert main(["schedule", "--steps", "15"]) == 0
        sched = build_schedule(15)
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "t,eta,alpha"
        assert len(lines) == 16
        t, eta, alpha = lines[8].split(",")
        assert t == "8"
        assert float(eta) == sched.etas[8]
        assert float(alpha) == sched.alphas[7]

    def test_file_output_reproducible(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["schedule", "--steps", "9", "--mode", "raw",
                     "--out", str(a)]) == 0
        assert main(["schedule", "--steps", "9", "--mode", "raw",
                     "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestDegrade:
    def test_writes_pair_and_residual(self, tmp_path):
        src = tmp_path / "hr.pgm"
        hr = _make_image(src, seed=1)
        out = tmp_path / "deg"
        assert main(["degrade", "--input", str(src), "--out", str(out)]) == 0
        pair = make_lr_pair(hr)
        lr = read_image(out / "lr.pgm")
        assert lr.shape == (4, 4, 1)
        resid = np.fromfile(out / "delta0.f64", dtype="<f8")
        np.testing.assert_array_equal(resid, pair.delta0.ravel())

    def test_reproducible(self, tmp_path):
        src = tmp_path / "hr.pgm"
        _make_image(src, seed=2)
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            assert main(["degrade", "--input", str(src), "--out", str(out)]) == 0
            outs.append(b"".join(sorted(p.read_bytes() for p in out.iterdir())))
        assert outs[0] == outs[1]

    def test_missing_input_flag(self, tmp_path, capsys):
        assert main(["degrade", "--out", str(tmp_path / "x")]) == 2

    def test_missing_input_file(self, tmp_path, capsys):
        assert main(["degrade", "--input", str(tmp_path / "no.pgm"),
                     "--out", str(tmp_path / "x")]) == 1


class TestForward:
    def test_writes_every_frame(self, tmp_path):
        src = tmp_path / "hr.pgm"
        _make_image(src, seed=3)
        out = tmp_path / "fwd"
        assert main(["forward", "--input", str(src), "--out", str(out),
                     "--steps", "6", "--seed", "4"]) == 0
        frames = sorted(p.name for p in out.iterdir())
        assert frames == [f"frame_{t:03d}.pgm" for t in range(7)]

    def test_seed_changes_frames_reproducibly(self, tmp_path):
        src = tmp_path / "hr.pgm"
        _make_image(src, seed=5)
        blobs = {}
        for tag, seed in (("a", "1"), ("b", "1"), ("c", "2")):
            out = tmp_path / tag
            assert main(["forward", "--input", str(src), "--out", str(out),
                         "--steps", "6", "--seed", seed]) == 0
            blobs[tag] = b"".join(
                p.read_bytes() for p in sorted(out.iterdir()))
        assert blobs["a"] == blobs["b"]
        assert blobs["a"] != blobs["c"]


class TestTrainAndSr:
    def _manifest(self, tmp_path, count=3):
        names = []
        for i in range(count):
            name = f"train_{i}.pgm"
            _make_image(tmp_path / name, seed=10 + i)
            names.append(name)
        manifest = tmp_path / "manifest.txt"
        manifest.write_text("\n".join(names) + "\n")
        return manifest

    def test_train_then_super_resolve(self, tmp_path):
        manifest = self._manifest(tmp_path)
        ckpt_path = tmp_path / "model.pxbk"
        loss_path = tmp_path / "loss.csv"
        argv = ["train", "--manifest", str(manifest),
                "--checkpoint", str(ckpt_path), "--out", str(loss_path),
                "--train-steps", "30", "--seed", "0"]
        assert main(argv) == 0
        lines = loss_path.read_text().splitlines()
        assert lines[0] == "step,loss"
        assert len(lines) == 31
        ckpt = load_checkpoint(ckpt_path)
        assert ckpt.step_count == 30

        lr_path = tmp_path / "small.pgm"
        write_image(read_image(tmp_path / "train_0.pgm")[::4, ::4], lr_path)
        sr_path = tmp_path / "sr.pgm"
        assert main(["sr", "--input", str(lr_path),
                     "--checkpoint", str(ckpt_path),
                     "--out", str(sr_path), "--seed", "1"]) == 0
        assert read_image(sr_path).shape == (16, 16, 1)

    def test_train_reproducible(self, tmp_path):
        manifest = self._manifest(tmp_path, count=2)
        blobs = []
        for tag in ("a", "b"):
            ckpt_path = tmp_path / f"{tag}.pxbk"
            assert main(["train", "--manifest", str(manifest),
                         "--checkpoint", str(ckpt_path),
                         "--train-steps", "10", "--seed", "3"]) == 0
            blobs.append(ckpt_path.read_bytes())
        assert blobs[0] == blobs[1]

    def test_sr_reproducible(self, tmp_path):
        manifest = self._manifest(tmp_path, count=2)
        ckpt_path = tmp_path / "m.pxbk"
        assert main(["train", "--manifest", str(manifest),
                     "--checkpoint", str(ckpt_path),
                     "--train-steps", "10", "--seed", "0"]) == 0
        lr_path = tmp_path / "small.pgm"
        write_image(read_image(tmp_path / "train_0.pgm")[::4, ::4], lr_path)
        outs = []
        for tag in ("a", "b"):
            sr_path = tmp_path / f"{tag}.pgm"
            assert main(["sr", "--input", str(lr_path),
                         "--checkpoint", str(ckpt_path),
                         "--out", str(sr_path), "--seed", "5"]) == 0
            outs.append(sr_path.read_bytes())
        assert outs[0] == outs[1]

    def test_empty_manifest(self, tmp_path, capsys):
        manifest = tmp_path / "empty.txt"
        manifest.write_text("\n")
        assert main(["train", "--manifest", str(manifest),
                     "--checkpoint", str(tmp_path / "m.pxbk")]) == 2

    def test_corrupt_checkpoint(self, tmp_path, capsys):
        lr_path = tmp_path / "lr.pgm"
        _make_image(lr_path, size=8)
        bad = tmp_path / "bad.pxbk"
        bad.write_bytes(b"PXBK\x01\x00\x00")
        assert main(["sr", "--input", str(lr_path), "--checkpoint", str(bad),
                     "--out", str(tmp_path / "o.pgm")]) == 1
        assert "error:" in capsys.readouterr().err

    def test_future_checkpoint_version(self, tmp_path, capsys):
        manifest = self._manifest(tmp_path, count=2)
        ckpt_path = tmp_path / "m.pxbk"
        assert main(["train", "--manifest", str(manifest),
                     "--checkpoint", str(ckpt_path),
                     "--train-steps", "5"]) == 0
        raw = bytearray(ckpt_path.read_bytes())
        raw[4] = 99
        ckpt_path.write_bytes(bytes(raw))
        lr_path = tmp_path / "lr.pgm"
        _make_image(lr_path, size=8)
        assert main(["sr", "--input", str(lr_path),
                     "--checkpoint", str(ckpt_path),
                     "--out", str(tmp_path / "o.pgm")]) == 1


class TestAnalyzeNoise:
    def test_ranks_from_flat_file(self, tmp_path):
        sample = _residual_file(tmp_path / "resid.f64")
        out = tmp_path / "fit.csv"
        assert main(["analyze-noise", "--input", str(sample), "--bins", "8",
                     "--sigma", "1.5", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "family,chi_square"
        assert len(lines) == 5
        assert lines[1].split(",")[0] == "brownian"

    def test_image_pair_route(self, tmp_path):
        gt = tmp_path / "gt.pgm"
        _make_image(gt, seed=6, size=32)
        test = tmp_path / "test.pgm"
        img = read_image(gt)
        noisy = np.clip(img + 0.1 * RngStream(7, 5).standard_normal(img.shape),
                        0.0, 1.0)
        write_image(noisy, test)
        out = tmp_path / "fit.csv"
        assert main(["analyze-noise", "--gt", str(gt), "--test", str(test),
                     "--bins", "8", "--out", str(out)]) == 0
        assert out.read_text().startswith("family,chi_square\n")

    def test_requires_some_input(self, tmp_path, capsys):
        assert main(["analyze-noise", "--out", str(tmp_path / "x.csv")]) == 2

    def test_too_few_samples(self, tmp_path, capsys):
        sample = _residual_file(tmp_path / "tiny.f64", n=100)
        assert main(["analyze-noise", "--input", str(sample),
                     "--out", str(tmp_path / "x.csv")]) == 1


class TestMetricsCommand:
    def test_csv_output(self, tmp_path, capsys):
        gt = tmp_path / "gt.pgm"
        img = _make_image(gt, seed=8)
        test = tmp_path / "t.pgm"
        write_image(np.clip(img + 0.04, 0.0, 1.0), test)
        assert main(["metrics", "--gt", str(gt), "--test", str(test)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "gt,test,psnr_db,ssim,loe,loe_grid"
        cells = lines[1].split(",")
        assert cells[0] == str(gt) and cells[1] == str(test)
        assert 20.0 < float(cells[2]) < 40.0

    def test_requires_both_images(self, tmp_path, capsys):
        gt = tmp_path / "gt.pgm"
        _make_image(gt)
        assert main(["metrics", "--gt", str(gt)]) == 2


class TestEdgeReportCommand:
    def test_writes_three_grids(self, tmp_path):
        gt = tmp_path / "gt.pgm"
        img = _make_image(gt, seed=9, size=28)
        test = tmp_path / "t.pgm"
        write_image(img[::-1], test)
        out = tmp_path / "edges"
        assert main(["edge-report", "--gt", str(gt), "--test", str(test),
                     "--out", str(out), "--patch", "7"]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["patch_diff.csv", "patch_means_gt.csv",
                         "patch_means_test.csv"]
        diff = np.loadtxt(out / "patch_diff.csv", delimiter=",")
        a = np.loadtxt(out / "patch_means_test.csv", delimiter=",")
        b = np.loadtxt(out / "patch_means_gt.csv", delimiter=",")
        assert diff.shape == (4, 4)
        np.testing.assert_allclose(diff, a - b, atol=1e-15)


class TestSweep:
    def test_csv_shape_and_reproducibility(self, tmp_path):
        argv = ["sweep", "--sigmas", "0.5,1.5", "--count", "2",
                "--eval-count", "1", "--size", "16", "--train-steps", "5",
                "--seed", "0"]
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{tag}.csv"
            assert main(argv + ["--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        lines = outs[0].decode().splitlines()
        assert lines[0] == "sigma,psnr_db,ssim,loe"
        assert len(lines) == 3
        assert lines[1].startswith("0.5,")
        assert lines[2].startswith("1.5,")
