"""Pluggable detection and facial-landmark sources.

The pipeline only sees the two small interfaces below, so model-backed
implementations can be swapped in without touching the rest of the code.
This module ships file-backed providers (JSONL of precomputed outputs)
and in-memory stubs for tests.
"""

from __future__ import annotations

import json
import logging
import math
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .boxes import BoundingBox, DegenerateBoxError
from .image import ImageBuffer
from .records import AccessibilityClass, Detection, FaceObservation, face_from_dict

logger = logging.getLogger(__name__)


class DetectionProvider(ABC):
    """Source of accessibility-marker detections for a full image."""

    @abstractmethod
    def detect(self, image_path: str) -> list[Detection]:
        """Detections for the image, any order. Unknown image yields []."""


class LandmarkProvider(ABC):
    """Source of facial landmark readings inside a person crop."""

    @abstractmethod
    def analyze(self, image_path: str, poi_box: BoundingBox) -> list[FaceObservation]:
        """Faces for the crop of ``poi_box``, boxes in crop-local coordinates.

        Every returned face box must lie fully inside the crop rectangle;
        the pipeline enforces this with ``check_landmark_contract``.
        """


class LandmarkContractError(ValueError):
    """A landmark provider returned a face box outside its crop."""


def crop_poi(image: ImageBuffer, box: BoundingBox) -> tuple[ImageBuffer, tuple[int, int]]:
    """Extract the pixel crop covering ``box`` and its (x, y) origin.

    The crop spans floor of the origin to ceil of the extent, clamped to
    the canvas, so every partially covered pixel is included.
    """
    x0, y0, x1, y1 = box.pixel_bounds(image.width, image.height)
    if x1 <= x0 or y1 <= y0:
        raise DegenerateBoxError(
            f"box {box.as_tuple()} covers no pixels of a "
            f"{image.width}x{image.height} image"
        )
    crop = ImageBuffer(image.pixels[y0:y1, x0:x1])
    return crop, (x0, y0)


def check_landmark_contract(
    faces: Sequence[FaceObservation], crop_width: int, crop_height: int
) -> None:
    """Raise LandmarkContractError if any face box leaves the crop."""
    for index, face in enumerate(faces):
        if face.face_box is None:
            continue
        b = face.face_box
        if b.x1 < 0 or b.y1 < 0 or b.x2 > crop_width or b.y2 > crop_height:
            raise LandmarkContractError(
                f"face {index} box {b.as_tuple()} exceeds its "
                f"{crop_width}x{crop_height} crop"
            )


def _read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from exc
            if not isinstance(entry, dict):
                raise ValueError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, entry


def _parse_detection(entry: dict) -> Detection:
    box = entry["box"]
    if not isinstance(box, (list, tuple)) or len(box) != 4:
        raise ValueError(f"box must be [x1, y1, x2, y2], got {box!r}")
    return Detection(
        box=BoundingBox(*(float(v) for v in box)),
        marker=AccessibilityClass.parse(entry["class"]),
        confidence=float(entry["confidence"]),
    )


class FileDetectionProvider(DetectionProvider):
    """Detections read from a JSONL file, one image per line.

    Line format::

        {"image": "path.png", "detections": [
            {"class": "UsesCrutches", "box": [x1, y1, x2, y2], "confidence": 0.9}
        ]}
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._by_image: dict[str, list[Detection]] = {}
        for lineno, entry in _read_jsonl(self.path):
            try:
                image = entry["image"]
                detections = [_parse_detection(d) for d in entry["detections"]]
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{self.path}:{lineno}: {exc}") from exc
            if image in self._by_image:
                raise ValueError(f"{self.path}:{lineno}: duplicate image {image!r}")
            self._by_image[image] = detections

    def detect(self, image_path: str) -> list[Detection]:
        key = str(image_path)
        if key not in self._by_image:
            logger.warning("no detection entry for %s; treating as empty", key)
            return []
        return list(self._by_image[key])


class FileLandmarkProvider(LandmarkProvider):
    """Landmark readings read from a JSONL file, faces in image coordinates.

    Line format::

        {"image": "path.png", "faces": [
            {"h_y_deg": -1.2, "p_eye_left": 0.99, "p_eye_right": 0.99,
             "p_smile": 0.18, "box": [x1, y1, x2, y2]}
        ]}

    ``analyze`` keeps the faces whose box lies inside the crop rectangle
    of the query box and shifts them to crop-local coordinates. Faces
    without a box cannot be placed, so they are always returned as-is.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._by_image: dict[str, list[FaceObservation]] = {}
        for lineno, entry in _read_jsonl(self.path):
            try:
                image = entry["image"]
                faces = [face_from_dict(f) for f in entry["faces"]]
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{self.path}:{lineno}: {exc}") from exc
            if image in self._by_image:
                raise ValueError(f"{self.path}:{lineno}: duplicate image {image!r}")
            self._by_image[image] = faces

    def images(self) -> list[str]:
        """The image paths present in the file, in file order."""
        return list(self._by_image)

    def faces_for(self, image_path: str) -> list[FaceObservation]:
        """All stored faces for the image, in image coordinates."""
        return list(self._by_image.get(str(image_path), []))

    def analyze(self, image_path: str, poi_box: BoundingBox) -> list[FaceObservation]:
        key = str(image_path)
        if key not in self._by_image:
            logger.warning("no landmark entry for %s; treating as empty", key)
            return []
        origin_x = math.floor(poi_box.x1)
        origin_y = math.floor(poi_box.y1)
        extent_x = math.ceil(poi_box.x2)
        extent_y = math.ceil(poi_box.y2)
        out: list[FaceObservation] = []
        for face in self._by_image[key]:
            if face.face_box is None:
                out.append(face)
                continue
            b = face.face_box
            if (
                b.x1 >= origin_x
                and b.y1 >= origin_y
                and b.x2 <= extent_x
                and b.y2 <= extent_y
            ):
                out.append(
                    FaceObservation(
                        head_yaw_deg=face.head_yaw_deg,
                        p_eye_left=face.p_eye_left,
                        p_eye_right=face.p_eye_right,
                        p_smile=face.p_smile,
                        face_box=BoundingBox(
                            b.x1 - origin_x,
                            b.y1 - origin_y,
                            b.x2 - origin_x,
                            b.y2 - origin_y,
                        ),
                    )
                )
        return out


class StubDetectionProvider(DetectionProvider):
    """Fixed detections keyed by image path; unknown paths yield []."""

    def __init__(self, responses: Mapping[str, Sequence[Detection]]):
        self._responses = {str(k): list(v) for k, v in responses.items()}

    def detect(self, image_path: str) -> list[Detection]:
        return list(self._responses.get(str(image_path), []))


class StubLandmarkProvider(LandmarkProvider):
    """Fixed faces keyed by (image path, exact box tuple); misses yield []."""

    def __init__(
        self,
        responses: Mapping[
            tuple[str, tuple[float, float, float, float]], Sequence[FaceObservation]
        ],
    ):
        self._responses = {
            (str(image), tuple(float(v) for v in box)): list(faces)
            for (image, box), faces in responses.items()
        }

    def analyze(self, image_path: str, poi_box: BoundingBox) -> list[FaceObservation]:
        key = (str(image_path), poi_box.as_tuple())
        return list(self._responses.get(key, []))
