"""Face de-identification: box enlargement plus Gaussian blur of the crop."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .boxes import BoundingBox, validate_box
from .image import ImageBuffer


class DegenerateRegionWarning(UserWarning):
    """A blur region rasterized to zero pixels; the image is returned unchanged."""


@dataclass(frozen=True)
class BlurParams:
    """Gaussian blur settings: odd kernel size and positive standard deviation."""

    kernel_size: int = 25
    sigma: float = 30.0

    def __post_init__(self):
        if self.kernel_size < 3 or self.kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd and >= 3, got {self.kernel_size}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")


def enlarge_box(box: BoundingBox, width: float, height: float) -> BoundingBox:
    """Grow a face box by one fifth of each coordinate, clamped to the image.

    The margin scales with the absolute coordinates, not the box size, so a
    box near the origin grows little. See enlarge_box_relative for the
    box-size-proportional alternative.
    """
    valid = validate_box(box, width, height)
    grown = BoundingBox(
        valid.x1 - valid.x1 / 5.0,
        valid.y1 - valid.y1 / 5.0,
        valid.x2 + valid.x2 / 5.0,
        valid.y2 + valid.y2 / 5.0,
    )
    return validate_box(grown, width, height)


def enlarge_box_relative(
    box: BoundingBox, width: float, height: float, pad_fraction: float = 0.2
) -> BoundingBox:
    """Alternate enlargement: pad each side by a fraction of the box size.

    Not the default behavior; offered for callers that want padding
    independent of where the box sits in the image.
    """
    valid = validate_box(box, width, height)
    pad_x = valid.width * pad_fraction
    pad_y = valid.height * pad_fraction
    grown = BoundingBox(valid.x1 - pad_x, valid.y1 - pad_y, valid.x2 + pad_x, valid.y2 + pad_y)
    return validate_box(grown, width, height)


def gaussian_kernel(params: BlurParams) -> np.ndarray:
    """2-D Gaussian kernel with entries exp(-(x^2+y^2)/(2 sigma^2)), normalized to sum 1."""
    half = params.kernel_size // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    xx, yy = np.meshgrid(offsets, offsets)
    kernel = np.exp(-(xx * xx + yy * yy) / (2.0 * params.sigma * params.sigma))
    return kernel / kernel.sum()


def _convolve2d_replicate(channel: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Direct 2-D convolution with clamp-to-edge padding; float64 accumulation."""
    half = kernel.shape[0] // 2
    padded = np.pad(channel.astype(np.float64), half, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, kernel.shape)
    return np.einsum("ijkl,kl->ij", windows, kernel)


def _quantize(values: np.ndarray) -> np.ndarray:
    # Round half away from zero; values are non-negative weighted averages.
    return np.clip(np.floor(values + 0.5), 0.0, 255.0).astype(np.uint8)


def blur_region(image: ImageBuffer, box: BoundingBox, params: BlurParams) -> ImageBuffer:
    """Blur the pixels covered by ``box``; everything outside stays bit-identical.

    The crop is convolved in isolation with replicate padding, so blur weights
    never read pixels outside the region.
    """
    ix1, iy1, ix2, iy2 = box.pixel_bounds(image.width, image.height)
    if ix2 - ix1 <= 0 or iy2 - iy1 <= 0:
        warnings.warn(
            f"blur region {box.as_tuple()} covers no pixels; image unchanged",
            DegenerateRegionWarning,
            stacklevel=2,
        )
        return image
    kernel = gaussian_kernel(params)
    out = image.mutable_copy()
    for c in range(image.channels):
        crop = image.pixels[iy1:iy2, ix1:ix2, c]
        out[iy1:iy2, ix1:ix2, c] = _quantize(_convolve2d_replicate(crop, kernel))
    return ImageBuffer(out)


def anonymize_image(
    image: ImageBuffer, face_boxes: Sequence[BoundingBox], params: BlurParams = BlurParams()
) -> ImageBuffer:
    """Enlarge each face box, then blur it, in input order."""
    result = image
    for box in face_boxes:
        grown = enlarge_box(box, image.width, image.height)
        result = blur_region(result, grown, params)
    return result
