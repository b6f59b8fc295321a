"""End-to-end flow: detect markers, crop each person, read the face, decide.

For every image the detector proposes persons of interest. Each POI crop
is handed to the landmark provider; the resulting face observations are
scored and classified, and a cue is raised for any POI that does not
look aware of the camera. A cue can only originate from a detection;
faces alone never trigger one.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .awareness import (
    Awareness,
    aggregate_scores,
    awareness_score,
    classify_awareness,
)
from .boxes import BoundingBox, DegenerateBoxError, validate_box
from .config import PipelineConfig
from .image import ImageBuffer, load_image, save_png
from .providers import (
    DetectionProvider,
    LandmarkProvider,
    check_landmark_contract,
    crop_poi,
)
from .records import AccessibilityClass, Detection, FaceObservation

logger = logging.getLogger(__name__)

#: Outline colors for annotated output, one per marker class.
CLASS_COLORS: dict[AccessibilityClass, tuple[int, int, int]] = {
    AccessibilityClass.USES_CRUTCHES: (0, 255, 0),
    AccessibilityClass.USES_WHEELCHAIR: (255, 192, 203),
    AccessibilityClass.STRUCTURALLY_IMPAIRED: (255, 165, 0),
}

_BANNER_COLOR = (220, 40, 40)


@dataclass(frozen=True)
class PoiAssessment:
    """Outcome for one detected person of interest."""

    detection: Detection
    box: BoundingBox
    n_faces: int
    score: Optional[float]
    awareness: Awareness
    cue: bool


@dataclass(frozen=True)
class CueDecision:
    """Per-image verdict; ``cue`` is the OR of the per-POI cues."""

    image: str
    status: str
    pois: tuple[PoiAssessment, ...]
    cue: bool
    error: Optional[str] = None

    def __post_init__(self):
        if self.status not in ("ok", "error"):
            raise ValueError(f"status must be 'ok' or 'error', got {self.status!r}")
        if self.cue != any(p.cue for p in self.pois):
            raise ValueError("overall cue must be the OR of the per-POI cues")


def select_poi_face(faces: Sequence[FaceObservation]) -> FaceObservation:
    """The face most likely to belong to the POI: largest box, ties topmost.

    Faces with boxes are preferred over boxless ones; with no boxes at
    all the first face stands in.
    """
    if not faces:
        raise ValueError("select_poi_face needs at least one face")
    boxed = [f for f in faces if f.face_box is not None]
    if not boxed:
        return faces[0]
    return min(boxed, key=lambda f: (-f.face_box.area, f.face_box.y1))


def assess_poi(
    image_path: str,
    image: ImageBuffer,
    detection: Detection,
    landmarks: LandmarkProvider,
    config: PipelineConfig,
) -> PoiAssessment:
    """Crop one detection, read its face(s), and decide whether to cue.

    A crop with no detectable face cannot confirm awareness, so it is
    treated as NotAware (score None) and cues.
    """
    box = validate_box(detection.box, image.width, image.height)
    crop, _origin = crop_poi(image, box)
    faces = landmarks.analyze(image_path, box)
    check_landmark_contract(faces, crop.width, crop.height)
    if not faces:
        return PoiAssessment(
            detection=detection,
            box=box,
            n_faces=0,
            score=None,
            awareness=Awareness.NOT_AWARE,
            cue=True,
        )
    if config.aggregation == "poi":
        scores = [awareness_score(select_poi_face(faces), config.weights, config.gaze)]
    else:
        scores = [awareness_score(f, config.weights, config.gaze) for f in faces]
    score = aggregate_scores(scores, config.aggregation)
    awareness = classify_awareness(score)
    return PoiAssessment(
        detection=detection,
        box=box,
        n_faces=len(faces),
        score=score,
        awareness=awareness,
        cue=awareness is Awareness.NOT_AWARE,
    )


def run_pipeline_image(
    image_path: str,
    detector: DetectionProvider,
    landmarks: LandmarkProvider,
    config: PipelineConfig,
) -> CueDecision:
    """Full flow for one image; any stage failure becomes an error record."""
    try:
        image = load_image(image_path)
        pois = tuple(
            assess_poi(image_path, image, detection, landmarks, config)
            for detection in detector.detect(image_path)
        )
    except Exception as exc:
        logger.warning("pipeline failed on %s: %s", image_path, exc)
        return CueDecision(
            image=str(image_path), status="error", pois=(), cue=False, error=str(exc)
        )
    return CueDecision(
        image=str(image_path),
        status="ok",
        pois=pois,
        cue=any(p.cue for p in pois),
    )


def run_pipeline(
    images: Sequence[str],
    detector: DetectionProvider,
    landmarks: LandmarkProvider,
    config: PipelineConfig,
) -> list[CueDecision]:
    """Process images concurrently; decisions come back in input order."""
    if config.workers == 1 or len(images) <= 1:
        return [
            run_pipeline_image(path, detector, landmarks, config) for path in images
        ]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        return list(
            pool.map(
                lambda path: run_pipeline_image(path, detector, landmarks, config),
                images,
            )
        )


def decision_to_dict(decision: CueDecision) -> dict:
    out: dict = {
        "image": decision.image,
        "status": decision.status,
        "cue": decision.cue,
        "pois": [
            {
                "class": p.detection.marker.value,
                "box": list(p.detection.box.as_tuple()),
                "confidence": p.detection.confidence,
                "n_faces": p.n_faces,
                "score": None if p.score is None else round(p.score, 8),
                "awareness": p.awareness.value,
                "cue": p.cue,
            }
            for p in decision.pois
        ],
    }
    if decision.error is not None:
        out["error"] = decision.error
    return out


def write_decisions(decisions: Sequence[CueDecision], path: str | Path) -> None:
    """One JSON object per line, keys sorted, so reruns are byte-identical."""
    lines = [
        json.dumps(decision_to_dict(d), sort_keys=True, separators=(", ", ": "))
        for d in decisions
    ]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def _draw_outline(
    pixels: np.ndarray, box: BoundingBox, color: tuple[int, int, int], thickness: int = 3
) -> None:
    height, width = pixels.shape[:2]
    x0, y0, x1, y1 = box.pixel_bounds(width, height)
    rgb = np.array(color, dtype=np.uint8)
    t = thickness
    pixels[y0 : min(y0 + t, y1), x0:x1] = rgb
    pixels[max(y1 - t, y0) : y1, x0:x1] = rgb
    pixels[y0:y1, x0 : min(x0 + t, x1)] = rgb
    pixels[y0:y1, max(x1 - t, x0) : x1] = rgb


def render_annotated(image: ImageBuffer, decision: CueDecision) -> ImageBuffer:
    """POI boxes in their class colors plus a top banner when cueing."""
    pixels = image.mutable_copy()
    if pixels.shape[2] == 1:
        pixels = np.repeat(pixels, 3, axis=2)
    for poi in decision.pois:
        _draw_outline(pixels, poi.box, CLASS_COLORS[poi.detection.marker])
    if decision.cue:
        banner = max(8, image.height // 16)
        pixels[:banner, :] = np.array(_BANNER_COLOR, dtype=np.uint8)
    return ImageBuffer(pixels)


def emit_annotated(
    decisions: Sequence[CueDecision], out_dir: str | Path
) -> list[Path]:
    """Write an annotated PNG per ok-status decision; returns the paths."""
    out_dir = Path(out_dir)
    written = []
    for decision in decisions:
        if decision.status != "ok":
            continue
        image = load_image(decision.image)
        target = out_dir / f"{Path(decision.image).stem}__annotated.png"
        save_png(render_annotated(image, decision), target)
        written.append(target)
    return written
