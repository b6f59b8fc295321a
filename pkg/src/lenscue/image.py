"""8-bit raster images and PNG/JPEG file handling."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


class ImageBuffer:
    """Immutable 8-bit image, 1 (grayscale) or 3 (RGB) channels, row-major."""

    __slots__ = ("_pixels",)

    def __init__(self, pixels: np.ndarray):
        array = np.asarray(pixels)
        if array.dtype != np.uint8:
            raise ValueError(f"pixel data must be uint8, got {array.dtype}")
        if array.ndim == 2:
            array = array[:, :, np.newaxis]
        if array.ndim != 3 or array.shape[2] not in (1, 3):
            raise ValueError(f"expected HxWx{{1,3}} pixel data, got shape {array.shape}")
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise ValueError(f"image dimensions must be positive, got shape {array.shape}")
        array = np.ascontiguousarray(array)
        array.flags.writeable = False
        self._pixels = array

    @property
    def pixels(self) -> np.ndarray:
        """Read-only (height, width, channels) array."""
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def channels(self) -> int:
        return self._pixels.shape[2]

    def tobytes(self) -> bytes:
        return self._pixels.tobytes()

    def mutable_copy(self) -> np.ndarray:
        return np.array(self._pixels, copy=True)

    @classmethod
    def full(cls, width: int, height: int, value: int = 0, channels: int = 3) -> "ImageBuffer":
        return cls(np.full((height, width, channels), value, dtype=np.uint8))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and bool(
            np.array_equal(self._pixels, other._pixels)
        )

    def __hash__(self) -> int:
        return hash((self._pixels.shape, self._pixels.tobytes()))

    def __repr__(self) -> str:
        return f"ImageBuffer({self.width}x{self.height}x{self.channels})"


def load_image(path: str | Path) -> ImageBuffer:
    """Read a PNG or JPEG file as grayscale or RGB."""
    with Image.open(path) as img:
        if img.mode == "L":
            converted = img
        elif img.mode in ("1", "I", "I;16", "LA"):
            converted = img.convert("L")
        else:
            converted = img.convert("RGB")
        return ImageBuffer(np.asarray(converted, dtype=np.uint8))


def save_png(image: ImageBuffer, path: str | Path) -> None:
    """Write a lossless PNG; blurred output must survive re-reads bit-exactly."""
    array = image.pixels
    if image.channels == 1:
        pil = Image.fromarray(array[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(array, mode="RGB")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pil.save(path, format="PNG")
