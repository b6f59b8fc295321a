"""Axis-aligned bounding boxes in diagonal-coordinate form."""

from __future__ import annotations

import math
from dataclasses import dataclass


class DegenerateBoxError(ValueError):
    """Raised when a box collapses to zero area where positive area is required."""


@dataclass(frozen=True)
class BoundingBox:
    """Pixel rectangle (x1, y1) top-left to (x2, y2) bottom-right, origin top-left.

    Coordinates are continuous; a W x H image spans [0, W] x [0, H].
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"box coordinate {name} must be finite, got {value!r}")
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise ValueError(f"box corners out of order: {self.as_tuple()}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    def contains(self, other: "BoundingBox") -> bool:
        """True when ``other`` lies fully inside this box."""
        return (
            self.x1 <= other.x1
            and self.y1 <= other.y1
            and other.x2 <= self.x2
            and other.y2 <= self.y2
        )

    def pixel_bounds(self, width: int, height: int) -> tuple[int, int, int, int]:
        """Integer pixel rectangle covered by this box: floor origin, ceil extent.

        Result is clamped to the image; may be empty (ix1 == ix2 or iy1 == iy2).
        """
        ix1 = max(0, math.floor(self.x1))
        iy1 = max(0, math.floor(self.y1))
        ix2 = min(width, math.ceil(self.x2))
        iy2 = min(height, math.ceil(self.y2))
        return ix1, iy1, max(ix1, ix2), max(iy1, iy2)


def validate_box(box: BoundingBox, width: float, height: float) -> BoundingBox:
    """Clamp ``box`` to [0, width] x [0, height], rejecting degenerate results.

    Idempotent; raises DegenerateBoxError when the clamped box has zero area.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"image dimensions must be positive, got {width}x{height}")
    x1 = min(max(box.x1, 0.0), float(width))
    y1 = min(max(box.y1, 0.0), float(height))
    x2 = min(max(box.x2, 0.0), float(width))
    y2 = min(max(box.y2, 0.0), float(height))
    clamped = BoundingBox(x1, y1, x2, y2)
    if clamped.area <= 0.0:
        raise DegenerateBoxError(
            f"box {box.as_tuple()} has zero area after clamping to {width}x{height}"
        )
    return clamped


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0.0 when disjoint or degenerate."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    if ix2 <= ix1 or iy2 <= iy1:
        return 0.0
    intersection = (ix2 - ix1) * (iy2 - iy1)
    union = a.area + b.area - intersection
    if union <= 0.0:
        return 0.0
    return intersection / union
