"""Privacy-aware photography toolkit.

Detects persons using mobility aids in images, estimates from facial
landmarks whether they are aware of the camera, cues the photographer
when consent is potentially absent, and irreversibly blurs faces for
dataset publication. Dataset augmentation and detector evaluation
utilities round out the pipeline.
"""

from .anonymize import BlurParams, anonymize_image, blur_region, enlarge_box, gaussian_kernel
from .augment import (
    AugmentationRanges,
    AugmentationSample,
    augment_dataset,
    sample_augmentation,
    transform_boxes,
    transform_image,
)
from .awareness import (
    DEFAULT_WEIGHTS,
    Awareness,
    AwarenessFeatures,
    GazeConfig,
    TrainingParams,
    awareness_score,
    classify_awareness,
    rotational_factor,
    train_weights,
)
from .boxes import BoundingBox, DegenerateBoxError, iou, validate_box
from .config import ConfigError, PipelineConfig, load_config
from .evaluate import (
    ClassificationMetrics,
    ConfusionCounts,
    average_precision,
    classification_metrics,
    evaluate_detections,
    match_detections,
)
from .image import ImageBuffer, load_image, save_png
from .pipeline import CueDecision, PoiAssessment, run_pipeline
from .providers import (
    DetectionProvider,
    FileDetectionProvider,
    FileLandmarkProvider,
    LandmarkContractError,
    LandmarkProvider,
    StubDetectionProvider,
    StubLandmarkProvider,
    crop_poi,
)
from .records import (
    AccessibilityClass,
    Annotation,
    AwarenessWeights,
    DatasetManifest,
    Detection,
    FaceObservation,
    ImageRecord,
    load_manifest,
    save_manifest,
)

__version__ = "0.1.0"

__all__ = [
    "AccessibilityClass",
    "Annotation",
    "AugmentationRanges",
    "AugmentationSample",
    "Awareness",
    "AwarenessFeatures",
    "AwarenessWeights",
    "BlurParams",
    "BoundingBox",
    "ClassificationMetrics",
    "ConfigError",
    "ConfusionCounts",
    "CueDecision",
    "DEFAULT_WEIGHTS",
    "DatasetManifest",
    "DegenerateBoxError",
    "Detection",
    "DetectionProvider",
    "FaceObservation",
    "FileDetectionProvider",
    "FileLandmarkProvider",
    "GazeConfig",
    "ImageBuffer",
    "ImageRecord",
    "LandmarkContractError",
    "LandmarkProvider",
    "PipelineConfig",
    "PoiAssessment",
    "StubDetectionProvider",
    "StubLandmarkProvider",
    "TrainingParams",
    "anonymize_image",
    "augment_dataset",
    "average_precision",
    "awareness_score",
    "blur_region",
    "classification_metrics",
    "classify_awareness",
    "crop_poi",
    "enlarge_box",
    "evaluate_detections",
    "gaussian_kernel",
    "iou",
    "load_config",
    "load_image",
    "load_manifest",
    "match_detections",
    "rotational_factor",
    "run_pipeline",
    "sample_augmentation",
    "save_manifest",
    "save_png",
    "train_weights",
    "transform_boxes",
    "transform_image",
    "validate_box",
    "__version__",
]
