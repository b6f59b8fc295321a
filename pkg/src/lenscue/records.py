"""Annotation, detection, and manifest records shared across the toolkit."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

from .boxes import BoundingBox


class AccessibilityClass(Enum):
    """Closed set of accessibility markers the detector reports."""

    USES_CRUTCHES = "UsesCrutches"
    USES_WHEELCHAIR = "UsesWheelchair"
    STRUCTURALLY_IMPAIRED = "StructurallyImpaired"

    @classmethod
    def parse(cls, label: str) -> "AccessibilityClass":
        for member in cls:
            if member.value == label:
                return member
        known = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown accessibility class {label!r} (expected one of: {known})")


@dataclass(frozen=True)
class Annotation:
    """Ground-truth box with marker class and a sensitivity flag.

    The sensitivity flag is carried through and reported, never predicted.
    """

    box: BoundingBox
    marker: AccessibilityClass
    sensitive: bool = False


@dataclass(frozen=True)
class Detection:
    """Detector output: box, marker class, and confidence in [0, 1]."""

    box: BoundingBox
    marker: AccessibilityClass
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence!r}")


@dataclass(frozen=True)
class FaceObservation:
    """Facial landmark summary for one face: head yaw plus eye/smile probabilities."""

    head_yaw_deg: float
    p_eye_left: float
    p_eye_right: float
    p_smile: float
    face_box: Optional[BoundingBox] = None

    def __post_init__(self):
        if not -180.0 <= self.head_yaw_deg <= 180.0:
            raise ValueError(f"head yaw must be in [-180, 180], got {self.head_yaw_deg!r}")
        for name in ("p_eye_left", "p_eye_right", "p_smile"):
            p = getattr(self, name)
            if not (math.isfinite(p) and 0.0 <= p <= 1.0):
                raise ValueError(f"{name} must be a probability in [0, 1], got {p!r}")


@dataclass(frozen=True)
class AwarenessWeights:
    """Linear awareness-score weights: rotation, eyes, smile, plus bias."""

    w_r: float
    w_e: float
    w_s: float
    bias_c: float

    def __post_init__(self):
        for name in ("w_r", "w_e", "w_s", "bias_c"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"weight {name} must be finite, got {value!r}")


@dataclass(frozen=True)
class AugmentationProvenance:
    """Links an augmented record to its source image and the transform applied."""

    source_image: str
    transform: dict


@dataclass(frozen=True)
class ImageRecord:
    image: str
    annotations: tuple[Annotation, ...] = ()
    split: str = "train"
    faces: Optional[tuple[FaceObservation, ...]] = None
    awareness_gt: Optional[bool] = None
    provenance: Optional[AugmentationProvenance] = None

    def __post_init__(self):
        if self.split not in ("train", "val"):
            raise ValueError(f"split must be 'train' or 'val', got {self.split!r}")


@dataclass(frozen=True)
class DatasetManifest:
    """An ordered list of image records; image paths are unique."""

    records: tuple[ImageRecord, ...] = ()

    def __post_init__(self):
        seen: set[str] = set()
        for record in self.records:
            if record.image in seen:
                raise ValueError(f"duplicate image path in manifest: {record.image!r}")
            seen.add(record.image)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


# --- manifest JSON (schema documented in the README) ---


def _box_to_list(box: BoundingBox) -> list[float]:
    return [box.x1, box.y1, box.x2, box.y2]


def _box_from_list(values) -> BoundingBox:
    if not isinstance(values, (list, tuple)) or len(values) != 4:
        raise ValueError(f"box must be a 4-element list, got {values!r}")
    return BoundingBox(*(float(v) for v in values))


def _face_to_dict(face: FaceObservation) -> dict:
    out = {
        "h_y_deg": face.head_yaw_deg,
        "p_eye_left": face.p_eye_left,
        "p_eye_right": face.p_eye_right,
        "p_smile": face.p_smile,
    }
    if face.face_box is not None:
        out["box"] = _box_to_list(face.face_box)
    return out


def face_from_dict(data: dict) -> FaceObservation:
    box = _box_from_list(data["box"]) if "box" in data and data["box"] is not None else None
    return FaceObservation(
        head_yaw_deg=float(data["h_y_deg"]),
        p_eye_left=float(data["p_eye_left"]),
        p_eye_right=float(data["p_eye_right"]),
        p_smile=float(data["p_smile"]),
        face_box=box,
    )


def record_to_dict(record: ImageRecord) -> dict:
    out: dict = {
        "image": record.image,
        "split": record.split,
        "annotations": [
            {
                "class": ann.marker.value,
                "box": _box_to_list(ann.box),
                "sensitive": ann.sensitive,
            }
            for ann in record.annotations
        ],
    }
    if record.awareness_gt is not None:
        out["awareness_gt"] = record.awareness_gt
    if record.faces is not None:
        out["faces"] = [_face_to_dict(face) for face in record.faces]
    if record.provenance is not None:
        out["provenance"] = {
            "source": record.provenance.source_image,
            "transform": record.provenance.transform,
        }
    return out


def record_from_dict(data: dict) -> ImageRecord:
    annotations = tuple(
        Annotation(
            box=_box_from_list(entry["box"]),
            marker=AccessibilityClass.parse(entry["class"]),
            sensitive=bool(entry.get("sensitive", False)),
        )
        for entry in data.get("annotations", [])
    )
    faces = None
    if "faces" in data:
        faces = tuple(face_from_dict(entry) for entry in data["faces"])
    provenance = None
    if "provenance" in data:
        provenance = AugmentationProvenance(
            source_image=data["provenance"]["source"],
            transform=dict(data["provenance"]["transform"]),
        )
    gt = data.get("awareness_gt")
    return ImageRecord(
        image=data["image"],
        annotations=annotations,
        split=data.get("split", "train"),
        faces=faces,
        awareness_gt=None if gt is None else bool(gt),
        provenance=provenance,
    )


def manifest_to_json(manifest: DatasetManifest) -> str:
    payload = {"records": [record_to_dict(record) for record in manifest.records]}
    return json.dumps(payload, indent=2) + "\n"


def manifest_from_json(text: str) -> DatasetManifest:
    payload = json.loads(text)
    records = tuple(record_from_dict(entry) for entry in payload["records"])
    return DatasetManifest(records=records)


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    Path(path).write_text(manifest_to_json(manifest), encoding="utf-8")


def load_manifest(path: str | Path) -> DatasetManifest:
    return manifest_from_json(Path(path).read_text(encoding="utf-8"))
