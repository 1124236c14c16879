"""Image file boundaries: 8-bit PNG and raw float32 fixture dumps.

Pixels live in [0, 1] inside the pipeline; quantization happens exactly
once at the file boundary: v/255 on load, round-half-away-from-zero of
v*255 (clamped to [0, 255]) on save.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import ImageError
from .image import Image

_RAW_MAGIC_LEN = 16  # width, height, channels, reserved -- each u32 LE


def load_png(path: str | Path) -> Image:
    """Load an 8-bit grayscale or RGB PNG. Alpha and 16-bit files are rejected."""
    path = Path(path)
    try:
        with PILImage.open(path) as im:
            mode = im.mode
            if mode in ("RGBA", "LA", "PA"):
                raise ImageError(f"{path}: alpha channel not supported (mode {mode})")
            if mode == "P":
                if "transparency" in im.info:
                    raise ImageError(f"{path}: palette transparency not supported")
                im = im.convert("RGB")
            elif mode == "1":
                im = im.convert("L")
            elif mode not in ("L", "RGB"):
                raise ImageError(f"{path}: unsupported mode {mode} (need 8-bit L or RGB)")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except FileNotFoundError:
        raise ImageError(f"{path}: file not found") from None
    except ImageError:
        raise
    except Exception as exc:  # Pillow decode errors
        raise ImageError(f"{path}: cannot decode ({exc})") from exc
    return Image(arr)


def save_png(img: Image, path: str | Path) -> None:
    """Write as 8-bit PNG (L for 1 channel, RGB for 3)."""
    path = Path(path)
    quantized = np.clip(np.floor(img.data * 255.0 + 0.5), 0.0, 255.0).astype(np.uint8)
    if img.channels == 1:
        pil = PILImage.fromarray(quantized[:, :, 0], mode="L")
    else:
        pil = PILImage.fromarray(quantized, mode="RGB")
    pil.save(path, format="PNG")


def png_bytes(img: Image) -> bytes:
    """The exact PNG encoding save_png would write, as a bytes object."""
    import io as _io

    quantized = np.clip(np.floor(img.data * 255.0 + 0.5), 0.0, 255.0).astype(np.uint8)
    if img.channels == 1:
        pil = PILImage.fromarray(quantized[:, :, 0], mode="L")
    else:
        pil = PILImage.fromarray(quantized, mode="RGB")
    buf = _io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def quantize_u8(img: Image) -> np.ndarray:
    """The exact 8-bit quantization used by save_png, exposed for tests."""
    return np.clip(np.floor(img.data * 255.0 + 0.5), 0.0, 255.0).astype(np.uint8)


def save_raw_f32(img: Image, path: str | Path) -> None:
    """Raw little-endian float32 planar dump with a 16-byte header."""
    header = struct.pack("<4I", img.width, img.height, img.channels, 0)
    planar = np.ascontiguousarray(img.data.transpose(2, 0, 1), dtype="<f4")
    Path(path).write_bytes(header + planar.tobytes())


def load_raw_f32(path: str | Path) -> Image:
    """Read a raw float32 planar dump written by save_raw_f32."""
    blob = Path(path).read_bytes()
    if len(blob) < _RAW_MAGIC_LEN:
        raise ImageError(f"{path}: truncated raw dump (no header)")
    w, h, c, _reserved = struct.unpack("<4I", blob[:_RAW_MAGIC_LEN])
    expected = _RAW_MAGIC_LEN + 4 * w * h * c
    if len(blob) != expected:
        raise ImageError(
            f"{path}: raw dump size {len(blob)} != expected {expected} "
            f"for {w}x{h}x{c}"
        )
    flat = np.frombuffer(blob, dtype="<f4", offset=_RAW_MAGIC_LEN)
    planar = flat.reshape(c, h, w).astype(np.float64)
    return Image(planar.transpose(1, 2, 0))
