"""End-to-end CLI behaviour."""

import json
import re

import numpy as np
import pytest
import torch

from octcodec.cli import main
from octcodec.data import load_image, save_image, synthetic_screen_dataset
from octcodec.evaluation import bpp as bpp_of
from octcodec.network import ScreenContentCodec, save_checkpoint
from octcodec import ModelConfig


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory):
    torch.manual_seed(0)
    path = tmp_path_factory.mktemp("ckpt") / "model.pt"
    save_checkpoint(ScreenContentCodec(ModelConfig(channels=16)).eval(), path)
    return path


@pytest.fixture(scope="module")
def png_image(tmp_path_factory):
    path = tmp_path_factory.mktemp("img") / "input.png"
    img = synthetic_screen_dataset(1, 70, 50, seed=2)[0]
    save_image(img, path)
    return path


class TestEncodeDecode:
    def test_round_trip_and_bpp_report(self, checkpoint, png_image, tmp_path, capsys):
        out_stream = tmp_path / "img.omr"
        out_png = tmp_path / "img.png"
        assert main(["encode", str(png_image), str(checkpoint), str(out_stream)]) == 0
        err = capsys.readouterr().err
        match = re.search(r"bpp=([0-9.]+)", err)
        assert match is not None
        reported = float(match.group(1))
        img = load_image(png_image)
        assert reported == pytest.approx(
            bpp_of(out_stream.stat().st_size, img.shape[:2]), abs=1e-6
        )
        assert main(["decode", str(out_stream), str(checkpoint), str(out_png)]) == 0
        decoded = load_image(out_png)
        assert decoded.shape == img.shape  # cropped to original dims

    def test_encode_deterministic(self, checkpoint, png_image, tmp_path):
        a = tmp_path / "a.omr"
        b = tmp_path / "b.omr"
        main(["encode", str(png_image), str(checkpoint), str(a)])
        main(["encode", str(png_image), str(checkpoint), str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_decode_wrong_checkpoint_fails(self, checkpoint, png_image, tmp_path, capsys):
        stream = tmp_path / "x.omr"
        main(["encode", str(png_image), str(checkpoint), str(stream)])
        other = tmp_path / "other.pt"
        torch.manual_seed(1)
        save_checkpoint(ScreenContentCodec(ModelConfig(channels=24)).eval(), other)
        rc = main(["decode", str(stream), str(other), str(tmp_path / "y.png")])
        assert rc != 0
        assert "error:" in capsys.readouterr().err

    def test_decode_corrupt_stream_fails(self, checkpoint, png_image, tmp_path, capsys):
        stream = tmp_path / "x.omr"
        main(["encode", str(png_image), str(checkpoint), str(stream)])
        stream.write_bytes(stream.read_bytes()[:-10])
        rc = main(["decode", str(stream), str(checkpoint), str(tmp_path / "y.png")])
        assert rc != 0


class TestTrainCommand:
    def test_desk_scale_smoke(self, tmp_path, capsys):
        run_dir = tmp_path / "run"
        rc = main(
            [
                "train",
                "--run-dir",
                str(run_dir),
                "--desk-scale",
                "--channels",
                "8",
                "--steps",
                "3",
                "--seed",
                "1",
            ]
        )
        assert rc == 0
        assert (run_dir / "checkpoints" / "final.pt").exists()
        assert (run_dir / "config.json").exists()
        assert (run_dir / "logs" / "metrics.jsonl").exists()
        summary = json.loads(capsys.readouterr().out)
        assert summary["steps"] == 3

    def test_refuses_nonempty_run_dir(self, tmp_path, capsys):
        run_dir = tmp_path / "run"
        run_dir.mkdir()
        (run_dir / "keep.txt").write_text("x")
        rc = main(
            ["train", "--run-dir", str(run_dir), "--desk-scale", "--channels", "8", "--steps", "1"]
        )
        assert rc == 1
        assert "force" in capsys.readouterr().err


class TestEvalCommand:
    def test_single_image_one_record(self, checkpoint, png_image, tmp_path):
        out_dir = tmp_path / "eval"
        rc = main(
            [
                "eval",
                "--checkpoint",
                str(checkpoint),
                "--data",
                str(png_image),
                "--out-dir",
                str(out_dir),
                "--plot",
            ]
        )
        assert rc == 0
        lines = (out_dir / "per_image.jsonl").read_text().splitlines()
        assert len(lines) == 1
        record = json.loads(lines[0])
        assert {"name", "bpp", "psnr"} <= set(record)
        assert (out_dir / "rd_curve.png").exists()


class TestBdrateCommand:
    def test_two_decimal_output(self, tmp_path, capsys):
        anchor = [
            {"bpp": 0.1, "psnr": 30.0},
            {"bpp": 0.2, "psnr": 33.0},
            {"bpp": 0.4, "psnr": 36.0},
            {"bpp": 0.8, "psnr": 39.0},
        ]
        test = [{"bpp": p["bpp"] / 2, "psnr": p["psnr"]} for p in anchor]
        a = tmp_path / "anchor.json"
        t = tmp_path / "test.json"
        a.write_text(json.dumps({"points": anchor}))
        t.write_text(json.dumps(test))
        assert main(["bdrate", str(a), str(t)]) == 0
        out = capsys.readouterr().out.strip()
        assert re.fullmatch(r"-?\d+\.\d\d", out)
        assert float(out) == pytest.approx(-50.0, abs=0.1)


class TestAblateCommand:
    def test_tiny_ablation_report(self, tmp_path, capsys):
        out_dir = tmp_path / "ablate"
        rc = main(
            [
                "ablate",
                "--out-dir",
                str(out_dir),
                "--desk-scale",
                "--channels",
                "8",
                "--steps",
                "2",
                "--seed",
                "0",
            ]
        )
        assert rc == 0
        rows = json.loads((out_dir / "report.json").read_text())
        assert [r["variant"] for r in rows] == [
            "basic",
            "basic+cascaded",
            "basic+cascaded+attention",
        ]
        for row in rows:
            assert {"variant", "lambda", "psnr", "bpp"} <= set(row)
        table = (out_dir / "report.txt").read_text()
        assert "variant" in table
