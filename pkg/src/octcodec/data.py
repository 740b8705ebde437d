"""Image I/O, dataset ingestion and synthetic screen-content generation."""

import json
import sys
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DatasetError

CATEGORIES = ("text-charts-graphics", "animation-movie-game", "mixed-ns-sc")

_CATEGORY_TOKENS = {
    "text-charts-graphics": ("text", "chart", "graphic", "tcg"),
    "animation-movie-game": ("anim", "movie", "game", "film", "amg"),
    "mixed-ns-sc": ("mix", "ns", "natural", "sc+ns"),
}


def load_image(path) -> np.ndarray:
    """Load an image file as uint8 RGB (H, W, 3)."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def save_image(array: np.ndarray, path) -> None:
    Image.fromarray(array, mode="RGB").save(path, format="PNG")


def image_to_tensor(array: np.ndarray):
    import torch

    t = torch.from_numpy(array.astype(np.float32) / 255.0)
    return t.permute(2, 0, 1).unsqueeze(0).contiguous()


def tensor_to_image(t) -> np.ndarray:
    """(1, 3, H, W) float in [0, 1] -> uint8 HWC, rounded to integer levels."""
    import torch

    with torch.no_grad():
        arr = (t.clamp(0.0, 1.0) * 255.0).round().to(torch.uint8)
    return arr[0].permute(1, 2, 0).cpu().numpy()


def _infer_category(subdir: str) -> str:
    name = subdir.lower()
    if name in CATEGORIES:
        return name
    for category, tokens in _CATEGORY_TOKENS.items():
        if any(tok in name for tok in tokens):
            return category
    return "mixed-ns-sc"


@dataclass
class ManifestEntry:
    path: str  # relative to the dataset root
    category: str
    width: int
    height: int
    split: str = "train"
    undersized: bool = False


@dataclass
class DatasetManifest:
    root: str
    entries: list

    def paths(self, split: str | None = None) -> list[Path]:
        root = Path(self.root)
        return [
            root / e.path
            for e in self.entries
            if split is None or e.split == split
        ]

    def to_json(self) -> str:
        return json.dumps(
            {"root": self.root, "entries": [asdict(e) for e in self.entries]},
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        blob = json.loads(text)
        entries = [ManifestEntry(**e) for e in blob["entries"]]
        return cls(root=blob["root"], entries=entries)


def ingest_dataset(root, manifest_path=None, min_size: int = 256) -> DatasetManifest:
    """Scan a directory of PNG images into a deterministic manifest.

    Categories come from a manifest file when given, else from subdirectory
    names. Only PNG files are accepted (lossy inputs would corrupt the
    distortion measurements). Unreadable files are excluded with a warning;
    images smaller than ``min_size`` are flagged as undersized.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"{root} is not a directory")

    overrides = {}
    if manifest_path is not None:
        blob = json.loads(Path(manifest_path).read_text())
        for e in blob.get("entries", []):
            overrides[e["path"]] = (
                e.get("category", "mixed-ns-sc"),
                e.get("split", "train"),
            )

    entries = []
    for path in sorted(root.rglob("*")):
        if not path.is_file():
            continue
        if path.suffix.lower() != ".png":
            if path.suffix.lower() in (".jpg", ".jpeg", ".webp"):
                print(f"warning: skipping lossy input {path}", file=sys.stderr)
            continue
        rel = path.relative_to(root).as_posix()
        try:
            with Image.open(path) as img:
                img.verify()
            with Image.open(path) as img:
                width, height = img.size
        except Exception as exc:  # noqa: BLE001 - any decode failure excludes the file
            print(f"warning: unreadable image {path}: {exc}", file=sys.stderr)
            continue
        if rel in overrides:
            category, split = overrides[rel]
        else:
            subdir = rel.split("/")[0] if "/" in rel else ""
            category, split = _infer_category(subdir), "train"
        if category not in CATEGORIES:
            category = _infer_category(category)
        entries.append(
            ManifestEntry(
                path=rel,
                category=category,
                width=width,
                height=height,
                split=split,
                undersized=min(width, height) < min_size,
            )
        )
    if not entries:
        raise DatasetError(f"no readable PNG images under {root}")
    return DatasetManifest(root=str(root), entries=entries)


def synthetic_screen_image(
    rng: np.random.Generator, height: int = 256, width: int = 256
) -> np.ndarray:
    """Generate a text-like screen-content image (uint8 RGB).

    Flat background, axis-aligned boxes, horizontal rules and rows of
    small glyph-like stamps: sharp edges, a small palette and repetitive
    patterns, the statistics screen captures have.
    """
    palette = np.array(
        [
            [255, 255, 255],
            [240, 240, 240],
            [0, 0, 0],
            [32, 32, 160],
            [200, 40, 40],
            [32, 140, 60],
            [250, 210, 80],
        ],
        dtype=np.uint8,
    )
    bg = palette[rng.integers(0, 2)]
    img = np.tile(bg, (height, width, 1)).astype(np.uint8)

    # flat panels with 1px borders
    for _ in range(int(rng.integers(2, 5))):
        y0 = int(rng.integers(0, max(1, height - 16)))
        x0 = int(rng.integers(0, max(1, width - 16)))
        h = int(rng.integers(12, max(13, height // 3)))
        w = int(rng.integers(12, max(13, width // 3)))
        y1, x1 = min(height, y0 + h), min(width, x0 + w)
        fill = palette[rng.integers(0, len(palette))]
        border = palette[2]
        img[y0:y1, x0:x1] = fill
        img[y0:y1, x0] = border
        img[y0:y1, x1 - 1] = border
        img[y0, x0:x1] = border
        img[y1 - 1, x0:x1] = border

    # glyph rows: repetitive 5x3 binary stamps on a light strip
    glyph_h, glyph_w = 5, 3
    n_glyphs = int(rng.integers(4, 9))
    glyphs = rng.integers(0, 2, size=(n_glyphs, glyph_h, glyph_w)).astype(bool)
    ink = palette[2]
    row_pitch = glyph_h + 3
    for row_top in range(4, height - glyph_h - 1, row_pitch * 2):
        strip_color = palette[rng.integers(0, 2)]
        img[row_top - 1 : row_top + glyph_h + 1, 2 : width - 2] = strip_color
        x = 4
        while x + glyph_w < width - 4:
            g = glyphs[int(rng.integers(0, n_glyphs))]
            patch = img[row_top : row_top + glyph_h, x : x + glyph_w]
            patch[g] = ink
            x += glyph_w + 1

    # a few horizontal rules
    for _ in range(int(rng.integers(1, 4))):
        y = int(rng.integers(0, height))
        img[y, :] = palette[int(rng.integers(2, len(palette)))]
    return img


def synthetic_screen_dataset(
    count: int, height: int = 256, width: int = 256, seed: int = 0
) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [synthetic_screen_image(rng, height, width) for _ in range(count)]
