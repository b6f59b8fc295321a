"""Dataset expansion: joint photometric/geometric transforms of images and boxes.

Geometry is applied in a fixed order -- flips, scale about the image center,
rotation about the image center, translation -- followed by a brightness
multiply. The order is part of the manifest provenance contract. Positive
rotation angles follow the standard counterclockwise formula on y-down image
coordinates, which reads as clockwise on screen.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .boxes import BoundingBox
from .image import ImageBuffer, load_image, save_png
from .records import (
    Annotation,
    AugmentationProvenance,
    DatasetManifest,
    ImageRecord,
)

logger = logging.getLogger(__name__)

MIN_VISIBILITY = 0.25


def _interval(name: str, value: tuple[float, float]) -> tuple[float, float]:
    lo, hi = float(value[0]), float(value[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
        raise ValueError(f"{name} range must be a finite (lo, hi) with lo <= hi, got {value!r}")
    return lo, hi


@dataclass(frozen=True)
class AugmentationRanges:
    """Sampling intervals per transform parameter, plus which flips are allowed."""

    rotation_deg: tuple[float, float] = (0.0, 90.0)
    brightness: tuple[float, float] = (0.2, 1.0)
    scale: tuple[float, float] = (0.5, 1.0)
    translate_x: tuple[float, float] = (-0.2, 0.3)
    translate_y: tuple[float, float] = (-0.1, 0.3)
    flip_horizontal: bool = True
    flip_vertical: bool = True

    def __post_init__(self):
        for name in ("rotation_deg", "brightness", "scale", "translate_x", "translate_y"):
            object.__setattr__(self, name, _interval(name, getattr(self, name)))
        if self.scale[0] <= 0:
            raise ValueError(f"scale must stay positive, got {self.scale!r}")
        if self.brightness[0] < 0:
            raise ValueError(f"brightness must be nonnegative, got {self.brightness!r}")


@dataclass(frozen=True)
class AugmentationSample:
    """One concrete draw of all transform parameters."""

    rotation_deg: float
    brightness: float
    scale: float
    translate_x: float
    translate_y: float
    flip_h: bool
    flip_v: bool
    rng_seed: int

    @classmethod
    def identity(cls) -> "AugmentationSample":
        return cls(
            rotation_deg=0.0,
            brightness=1.0,
            scale=1.0,
            translate_x=0.0,
            translate_y=0.0,
            flip_h=False,
            flip_v=False,
            rng_seed=0,
        )

    def to_dict(self) -> dict:
        return {
            "rotation_deg": self.rotation_deg,
            "brightness": self.brightness,
            "scale": self.scale,
            "translate_x": self.translate_x,
            "translate_y": self.translate_y,
            "flip_h": self.flip_h,
            "flip_v": self.flip_v,
            "rng_seed": self.rng_seed,
        }


def sample_augmentation(ranges: AugmentationRanges, seed: int) -> AugmentationSample:
    """Draw one parameter set, uniformly and independently, from ``ranges``.

    Draw order is fixed (rotation, brightness, scale, translate x/y, flips)
    so a given seed always produces the same sample.
    """
    rng = np.random.default_rng(seed)
    rotation = float(rng.uniform(*ranges.rotation_deg))
    brightness = float(rng.uniform(*ranges.brightness))
    scale = float(rng.uniform(*ranges.scale))
    translate_x = float(rng.uniform(*ranges.translate_x))
    translate_y = float(rng.uniform(*ranges.translate_y))
    flip_h = bool(rng.random() < 0.5) if ranges.flip_horizontal else False
    flip_v = bool(rng.random() < 0.5) if ranges.flip_vertical else False
    return AugmentationSample(
        rotation_deg=rotation,
        brightness=brightness,
        scale=scale,
        translate_x=translate_x,
        translate_y=translate_y,
        flip_h=flip_h,
        flip_v=flip_v,
        rng_seed=int(seed),
    )


def _translate(tx: float, ty: float) -> np.ndarray:
    return np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])


def _rotation_about(theta_rad: float, cx: float, cy: float) -> np.ndarray:
    c, s = math.cos(theta_rad), math.sin(theta_rad)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return _translate(cx, cy) @ rot @ _translate(-cx, -cy)


def _scale_about(factor: float, cx: float, cy: float) -> np.ndarray:
    return np.array(
        [
            [factor, 0.0, cx * (1.0 - factor)],
            [0.0, factor, cy * (1.0 - factor)],
            [0.0, 0.0, 1.0],
        ]
    )


def _flips(flip_h: bool, flip_v: bool, width: float, height: float) -> np.ndarray:
    m = np.eye(3)
    if flip_h:
        m = np.array([[-1.0, 0.0, width], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]) @ m
    if flip_v:
        m = np.array([[1.0, 0.0, 0.0], [0.0, -1.0, height], [0.0, 0.0, 1.0]]) @ m
    return m


def forward_matrix(sample: AugmentationSample, width: int, height: int) -> np.ndarray:
    """3x3 map from source to destination coordinates for the sample's geometry."""
    cx, cy = width / 2.0, height / 2.0
    flips = _flips(sample.flip_h, sample.flip_v, width, height)
    scale = _scale_about(sample.scale, cx, cy)
    rotate = _rotation_about(math.radians(sample.rotation_deg), cx, cy)
    translate = _translate(sample.translate_x * width, sample.translate_y * height)
    return translate @ rotate @ scale @ flips


def _inverse_matrix(sample: AugmentationSample, width: int, height: int) -> np.ndarray:
    # Built from inverse factors in reverse order (not numerically inverted)
    # so identity and flip samples map pixel centers exactly.
    cx, cy = width / 2.0, height / 2.0
    flips = _flips(sample.flip_h, sample.flip_v, width, height)
    unscale = _scale_about(1.0 / sample.scale, cx, cy)
    unrotate = _rotation_about(-math.radians(sample.rotation_deg), cx, cy)
    untranslate = _translate(-sample.translate_x * width, -sample.translate_y * height)
    return flips @ unscale @ unrotate @ untranslate


def transform_image(image: ImageBuffer, sample: AugmentationSample) -> ImageBuffer:
    """Warp the image per the sample; same canvas size, uncovered pixels black.

    Bilinear interpolation, float accumulation, one final rounding half away
    from zero after the brightness multiply.
    """
    h, w = image.height, image.width
    inv = _inverse_matrix(sample, w, h)

    xd, yd = np.meshgrid(np.arange(w, dtype=np.float64) + 0.5, np.arange(h, dtype=np.float64) + 0.5)
    sx = inv[0, 0] * xd + inv[0, 1] * yd + inv[0, 2]
    sy = inv[1, 0] * xd + inv[1, 1] * yd + inv[1, 2]

    gx = sx - 0.5
    gy = sy - 0.5
    x0 = np.floor(gx)
    y0 = np.floor(gy)
    fx = gx - x0
    fy = gy - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    out = np.empty((h, w, image.channels), dtype=np.uint8)
    source = image.pixels.astype(np.float64)
    corners = ((x0, y0, (1 - fx) * (1 - fy)), (x0 + 1, y0, fx * (1 - fy)),
               (x0, y0 + 1, (1 - fx) * fy), (x0 + 1, y0 + 1, fx * fy))
    for c in range(image.channels):
        acc = np.zeros((h, w), dtype=np.float64)
        plane = source[:, :, c]
        for cx_idx, cy_idx, weight in corners:
            inside = (cx_idx >= 0) & (cx_idx < w) & (cy_idx >= 0) & (cy_idx < h)
            values = plane[np.clip(cy_idx, 0, h - 1), np.clip(cx_idx, 0, w - 1)]
            acc += np.where(inside, weight * values, 0.0)
        acc *= sample.brightness
        out[:, :, c] = np.clip(np.floor(acc + 0.5), 0.0, 255.0).astype(np.uint8)
    return ImageBuffer(out)


def transform_boxes(
    annotations: Sequence[Annotation],
    sample: AugmentationSample,
    width: int,
    height: int,
    min_visibility: float = MIN_VISIBILITY,
) -> list[Annotation]:
    """Map each box through the sample's affine map and take the axis-aligned hull.

    Hulls are clamped to the canvas; a box is dropped when its visible area
    falls below ``min_visibility`` of the original box area.
    """
    matrix = forward_matrix(sample, width, height)
    out: list[Annotation] = []
    for ann in annotations:
        box = ann.box
        xs = np.array([box.x1, box.x2, box.x1, box.x2])
        ys = np.array([box.y1, box.y1, box.y2, box.y2])
        mapped_x = matrix[0, 0] * xs + matrix[0, 1] * ys + matrix[0, 2]
        mapped_y = matrix[1, 0] * xs + matrix[1, 1] * ys + matrix[1, 2]
        hx1 = min(max(float(mapped_x.min()), 0.0), float(width))
        hy1 = min(max(float(mapped_y.min()), 0.0), float(height))
        hx2 = min(max(float(mapped_x.max()), 0.0), float(width))
        hy2 = min(max(float(mapped_y.max()), 0.0), float(height))
        visible = max(0.0, hx2 - hx1) * max(0.0, hy2 - hy1)
        if visible <= 0.0 or visible < min_visibility * box.area:
            continue
        out.append(
            Annotation(
                box=BoundingBox(hx1, hy1, hx2, hy2),
                marker=ann.marker,
                sensitive=ann.sensitive,
            )
        )
    return out


def _record_seed(seed: int, record_index: int, aug_index: int) -> int:
    return int(np.random.SeedSequence([seed, record_index, aug_index]).generate_state(1)[0])


def augment_dataset(
    manifest: DatasetManifest,
    ranges: AugmentationRanges = AugmentationRanges(),
    per_image: int = 10,
    seed: int = 0,
    out_dir: str | Path = "augmented",
    min_visibility: float = MIN_VISIBILITY,
    on_skip: Optional[Callable[[str, Exception], None]] = None,
) -> DatasetManifest:
    """Expand the manifest: each readable source yields itself plus ``per_image``
    augmented records with transformed annotations and provenance.

    Unreadable images are skipped (reported via ``on_skip`` or a log warning)
    and the run continues. Deterministic for a fixed seed.
    """
    if per_image < 0:
        raise ValueError(f"per_image must be nonnegative, got {per_image}")
    out_path = Path(out_dir)
    if per_image > 0:
        out_path.mkdir(parents=True, exist_ok=True)

    records: list[ImageRecord] = []
    for r_index, record in enumerate(manifest):
        if per_image == 0:
            records.append(record)
            continue
        try:
            image = load_image(record.image)
        except Exception as exc:  # unreadable file, bad format
            if on_skip is not None:
                on_skip(record.image, exc)
            else:
                logger.warning("skipping unreadable image %s: %s", record.image, exc)
            continue
        records.append(record)
        stem = Path(record.image).stem
        for k in range(per_image):
            child_seed = _record_seed(seed, r_index, k)
            sample = sample_augmentation(ranges, child_seed)
            warped = transform_image(image, sample)
            boxes = transform_boxes(
                record.annotations, sample, image.width, image.height, min_visibility
            )
            name = f"{stem}__r{r_index:04d}_a{k:02d}.png"
            target = out_path / name
            save_png(warped, target)
            records.append(
                ImageRecord(
                    image=target.as_posix(),
                    annotations=tuple(boxes),
                    split=record.split,
                    faces=None,
                    awareness_gt=record.awareness_gt,
                    provenance=AugmentationProvenance(
                        source_image=record.image, transform=sample.to_dict()
                    ),
                )
            )
    return DatasetManifest(records=tuple(records))
