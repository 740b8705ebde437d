"""Dataset ingestion and the synthetic screen-content generator."""

import numpy as np
import pytest

from octcodec.data import (
    CATEGORIES,
    DatasetManifest,
    ingest_dataset,
    load_image,
    save_image,
    synthetic_screen_dataset,
    synthetic_screen_image,
)
from octcodec.errors import DatasetError


def _write_png(path, h=32, w=32, value=128):
    arr = np.full((h, w, 3), value, dtype=np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_image(arr, path)


class TestIngest:
    def test_three_categories_mapped(self, tmp_path):
        for sub, n in [("text_pages", 2), ("game_captures", 2), ("mixed_ns", 2)]:
            for i in range(n):
                _write_png(tmp_path / sub / f"img_{i}.png")
        manifest = ingest_dataset(tmp_path, min_size=16)
        assert len(manifest.entries) == 6
        cats = {e.category for e in manifest.entries}
        assert cats == set(CATEGORIES)

    def test_empty_directory_rejected(self, tmp_path):
        with pytest.raises(DatasetError):
            ingest_dataset(tmp_path)

    def test_missing_directory_rejected(self, tmp_path):
        with pytest.raises(DatasetError):
            ingest_dataset(tmp_path / "nope")

    def test_deterministic_manifest_bytes(self, tmp_path):
        for i in range(3):
            _write_png(tmp_path / "text" / f"{i}.png")
        a = ingest_dataset(tmp_path, min_size=16).to_json()
        b = ingest_dataset(tmp_path, min_size=16).to_json()
        assert a == b

    def test_lossy_files_skipped(self, tmp_path, capsys):
        _write_png(tmp_path / "text" / "good.png")
        (tmp_path / "text" / "bad.jpg").write_bytes(b"\xff\xd8\xff\xe0 not really")
        manifest = ingest_dataset(tmp_path, min_size=16)
        assert len(manifest.entries) == 1
        assert "lossy" in capsys.readouterr().err

    def test_unreadable_file_excluded(self, tmp_path, capsys):
        _write_png(tmp_path / "text" / "good.png")
        (tmp_path / "text" / "broken.png").write_bytes(b"\x89PNG\r\n\x1a\n junk")
        manifest = ingest_dataset(tmp_path, min_size=16)
        assert len(manifest.entries) == 1
        assert "unreadable" in capsys.readouterr().err

    def test_undersized_flagged(self, tmp_path):
        _write_png(tmp_path / "text" / "small.png", h=16, w=16)
        _write_png(tmp_path / "text" / "big.png", h=64, w=64)
        manifest = ingest_dataset(tmp_path, min_size=32)
        flags = {e.path.split("/")[-1]: e.undersized for e in manifest.entries}
        assert flags == {"small.png": True, "big.png": False}

    def test_manifest_file_overrides(self, tmp_path):
        _write_png(tmp_path / "whatever" / "a.png")
        manifest_file = tmp_path / "manifest.json"
        manifest_file.write_text(
            '{"entries": [{"path": "whatever/a.png", "category": "animation-movie-game", "split": "val"}]}'
        )
        manifest = ingest_dataset(tmp_path, manifest_file, min_size=16)
        entry = manifest.entries[0]
        assert entry.category == "animation-movie-game"
        assert entry.split == "val"
        assert manifest.paths("val")

    def test_json_round_trip(self, tmp_path):
        _write_png(tmp_path / "text" / "a.png")
        manifest = ingest_dataset(tmp_path, min_size=16)
        again = DatasetManifest.from_json(manifest.to_json())
        assert again.to_json() == manifest.to_json()


class TestImageIO:
    def test_png_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        arr = rng.integers(0, 256, (20, 30, 3)).astype(np.uint8)
        save_image(arr, tmp_path / "x.png")
        assert np.array_equal(load_image(tmp_path / "x.png"), arr)


class TestSynthetic:
    def test_shapes_and_dtype(self):
        rng = np.random.default_rng(1)
        img = synthetic_screen_image(rng, 64, 96)
        assert img.shape == (64, 96, 3)
        assert img.dtype == np.uint8

    def test_screen_statistics(self):
        # screen content: few distinct colors, many exactly-flat neighbors
        rng = np.random.default_rng(2)
        img = synthetic_screen_image(rng, 128, 128)
        colors = np.unique(img.reshape(-1, 3), axis=0)
        assert len(colors) <= 16
        flat = (img[:, 1:] == img[:, :-1]).all(axis=2).mean()
        assert flat > 0.5

    def test_dataset_deterministic(self):
        a = synthetic_screen_dataset(3, 64, 64, seed=9)
        b = synthetic_screen_dataset(3, 64, 64, seed=9)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
