#!/usr/bin/env python3
"""Regenerate the committed test fixtures under tests/data/.

Everything here is deterministic: re-running must reproduce the committed
bytes exactly. The 7x7 golden is produced by the brute-force reference
resampler in tests/oracles.py (not the library under test) and stored in
the raw float32 dump format described in FORMATS.md.

Usage: python3 tools/make_fixtures.py
"""

from __future__ import annotations

import json
import struct
import sys
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from scipy.ndimage import gaussian_filter

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from oracles import reference_resize  # noqa: E402

DATA = ROOT / "tests" / "data"


def save_u8_png(arr: np.ndarray, path: Path) -> None:
    """Quantize [0,1] float to 8-bit and write a PNG (direct via Pillow)."""
    u8 = np.clip(np.floor(arr * 255.0 + 0.5), 0, 255).astype(np.uint8)
    if u8.ndim == 3 and u8.shape[2] == 1:
        u8 = u8[:, :, 0]
    mode = "L" if u8.ndim == 2 else "RGB"
    PILImage.fromarray(u8, mode=mode).save(path)


def save_raw_f32(arr: np.ndarray, path: Path) -> None:
    """Raw little-endian float32 planar dump with the 16-byte header."""
    h, w, c = arr.shape
    planar = np.ascontiguousarray(arr.transpose(2, 0, 1), dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4I", w, h, c, 0))
        fh.write(planar.tobytes())


def _stroke_mask(h: int, w: int, segments, thickness: float) -> np.ndarray:
    """Boolean rasterization: pixel centers within thickness/2 of a segment."""
    ys, xs = np.mgrid[0:h, 0:w]
    pts = np.stack([xs + 0.5, ys + 0.5], axis=-1).astype(np.float64)
    mask = np.zeros((h, w), dtype=bool)
    for (x0, y0), (x1, y1) in segments:
        a = np.array([x0, y0], dtype=np.float64)
        d = np.array([x1, y1], dtype=np.float64) - a
        rel = pts - a
        denom = float(d @ d)
        t = np.clip((rel @ d) / denom, 0.0, 1.0) if denom > 0 else np.zeros((h, w))
        nearest = a + t[..., None] * d
        dist = np.linalg.norm(pts - nearest, axis=-1)
        mask |= dist <= thickness / 2.0
    return mask


def make_digit_28() -> np.ndarray:
    """A 28x28 grayscale glyph of the digit five, soft-edged like a scan.

    Drawn at 4x resolution, box-downsampled, then lightly blurred. White
    strokes on black background, matching the usual digit-dataset polarity.
    """
    scale = 4
    segments = [
        ((8.0, 5.5), (19.5, 5.5)),    # top bar
        ((8.5, 5.5), (8.5, 13.0)),    # upper left stem
        ((8.5, 13.0), (16.5, 13.0)),  # middle bar
        ((17.5, 14.0), (18.5, 19.5)), # lower right stem
        ((6.5, 21.5), (16.5, 21.0)),  # bottom bar
        ((16.5, 21.0), (18.5, 19.5)), # bottom-right hook
    ]
    hi_segments = [
        ((x0 * scale, y0 * scale), (x1 * scale, y1 * scale))
        for (x0, y0), (x1, y1) in segments
    ]
    hi = _stroke_mask(28 * scale, 28 * scale, hi_segments, thickness=2.4 * scale)
    lo = hi.astype(np.float64).reshape(28, scale, 28, scale).mean(axis=(1, 3))
    soft = gaussian_filter(lo, sigma=0.6)
    out = np.clip(soft / soft.max() * 0.96, 0.0, 1.0)
    return out[:, :, None]


def make_patch_128() -> np.ndarray:
    """A 128x128 RGB patch with natural-image statistics: smooth shading,
    mid-frequency texture, and a little band-limited noise."""
    n = 128
    ys, xs = np.mgrid[0:n, 0:n].astype(np.float64) / n
    rng = np.random.default_rng(20251104)

    base_r = 0.45 + 0.25 * np.sin(2 * np.pi * (0.7 * xs + 0.2 * ys) + 0.3)
    base_g = 0.40 + 0.22 * np.sin(2 * np.pi * (0.3 * xs + 0.9 * ys) + 1.7)
    base_b = 0.38 + 0.20 * np.cos(2 * np.pi * (0.5 * xs - 0.6 * ys) + 0.9)

    texture = 0.07 * np.sin(2 * np.pi * (4.0 * xs + 7.0 * ys)) * np.cos(
        2 * np.pi * (6.0 * xs - 3.0 * ys)
    )
    bump = 0.18 * np.exp(-(((xs - 0.38) ** 2 + (ys - 0.55) ** 2) / 0.02))
    noise = gaussian_filter(rng.standard_normal((n, n, 3)), sigma=(1.5, 1.5, 0)) * 0.04

    img = np.stack([base_r, base_g, base_b], axis=-1)
    img += (texture + bump)[:, :, None]
    img += noise
    return np.clip(img, 0.02, 0.98)


def make_study_ballots(path: Path) -> None:
    """30 ballots for a 24-candidate digit set: 22 label the content "5",
    8 label it "6", two distinct selections each."""
    rng = np.random.default_rng(73308)
    lines = []
    for i in range(30):
        voter = f"p{i + 1:02d}"
        label = "5" if i < 22 else "6"
        # labelers of "5" prefer low indices, "6" high ones, with overlap
        pool = np.arange(0, 16) if label == "5" else np.arange(8, 24)
        sel = sorted(int(x) for x in rng.choice(pool, size=2, replace=False))
        record = {
            "voter_id": voter,
            "set_id": "digit-1",
            "selections": sel,
            "label": label,
            "submitted_at": f"2025-11-04T10:{i:02d}:00Z",
        }
        lines.append(json.dumps(record, separators=(",", ":"), sort_keys=True))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)

    digit = make_digit_28()
    save_u8_png(digit, DATA / "digit_28.png")

    # Golden is computed from the *decoded* PNG so the test round-trips the
    # exact committed bytes, not the pre-quantization float array.
    decoded = np.asarray(PILImage.open(DATA / "digit_28.png"), dtype=np.float64) / 255.0
    golden = reference_resize(decoded[:, :, None], 7, 7, antialias=True)
    save_raw_f32(golden, DATA / "digit_7x7_golden.raw")

    patch = make_patch_128()
    save_u8_png(patch, DATA / "patch_128.png")

    make_study_ballots(DATA / "digit_study_ballots.jsonl")

    for p in sorted(DATA.iterdir()):
        print(f"{p.relative_to(ROOT)}  {p.stat().st_size} bytes")


if __name__ == "__main__":
    main()
