"""Awareness scoring of a person of interest from facial landmark features.

The rotational factor and the score are evaluated in degrees, with the
straight angle taken as 180; this is the only reading under which the
published reference rows reproduce to three decimals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .records import AwarenessWeights, FaceObservation

#: Weights learned by the original logistic-regression fit; used as defaults.
DEFAULT_WEIGHTS = AwarenessWeights(
    w_r=-0.07572891,
    w_e=0.59910001,
    w_s=-0.86601255,
    bias_c=-0.02311644,
)


@dataclass(frozen=True)
class GazeConfig:
    """Head-yaw tolerance (degrees) below which a face counts as camera-facing."""

    tau_r_deg: float = 10.0
    straight_angle_deg: float = 180.0

    def __post_init__(self):
        if not 0.0 < self.tau_r_deg < self.straight_angle_deg:
            raise ValueError(
                f"need 0 < tau_r_deg < straight_angle_deg, got "
                f"{self.tau_r_deg!r} vs {self.straight_angle_deg!r}"
            )


@dataclass(frozen=True)
class AwarenessFeatures:
    """Regressors of the awareness score."""

    one_minus_rotation_factor: float
    mean_eye_open: float
    p_smile: float


class Awareness(Enum):
    AWARE = "Aware"
    NOT_AWARE = "NotAware"


def rotational_factor(head_yaw_deg: float, cfg: GazeConfig = GazeConfig()) -> float:
    """Normalized head-yaw magnitude beyond the tolerance; 0 inside the tolerance.

    (|yaw| - 2 tau) / (straight - tau) for |yaw| > tau, else 0. Values in
    (tau, 2 tau) come out negative and are passed through unmodified.
    """
    yaw = abs(head_yaw_deg)
    tau = abs(cfg.tau_r_deg)
    if yaw <= tau:
        return 0.0
    return (yaw - 2.0 * tau) / (cfg.straight_angle_deg - tau)


def features_from_observation(
    obs: FaceObservation, cfg: GazeConfig = GazeConfig()
) -> AwarenessFeatures:
    return AwarenessFeatures(
        one_minus_rotation_factor=1.0 - rotational_factor(obs.head_yaw_deg, cfg),
        mean_eye_open=(obs.p_eye_left + obs.p_eye_right) / 2.0,
        p_smile=obs.p_smile,
    )


def awareness_score(
    obs: FaceObservation,
    weights: AwarenessWeights = DEFAULT_WEIGHTS,
    cfg: GazeConfig = GazeConfig(),
) -> float:
    """Linear awareness score; positive means the subject looks aware."""
    feats = features_from_observation(obs, cfg)
    return (
        weights.w_r * feats.one_minus_rotation_factor
        + weights.w_e * feats.mean_eye_open
        + weights.w_s * feats.p_smile
        + weights.bias_c
    )


def classify_awareness(score: float) -> Awareness:
    """Aware iff score > 0; an exact tie is NotAware (prompt for consent)."""
    if not math.isfinite(score):
        raise ValueError(f"score must be finite, got {score!r}")
    return Awareness.AWARE if score > 0.0 else Awareness.NOT_AWARE


def aggregate_scores(scores: Sequence[float], mode: str) -> float:
    """Collapse per-face scores to one: 'min', 'avg', or 'poi' (single entry)."""
    if len(scores) == 0:
        raise ValueError("cannot aggregate an empty score list")
    if mode == "min":
        return min(scores)
    if mode == "avg":
        return sum(scores) / len(scores)
    if mode == "poi":
        if len(scores) != 1:
            raise ValueError(f"poi mode expects exactly one score, got {len(scores)}")
        return scores[0]
    raise ValueError(f"unknown aggregation mode {mode!r} (expected min, avg, or poi)")


# --- logistic-regression trainer ---


@dataclass(frozen=True)
class TrainingParams:
    learning_rate: float = 0.1
    iterations: int = 5000
    l2: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.iterations < 1 or self.l2 < 0:
            raise ValueError(f"invalid training params: {self}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(theta: np.ndarray, features: np.ndarray, labels: np.ndarray, l2: float = 0.0) -> float:
    """Mean cross-entropy of sigmoid(features @ w + bias) vs labels.

    ``theta`` packs the three weights followed by the bias.
    """
    z = features @ theta[:-1] + theta[-1]
    # log(1 + exp(-|z|)) form avoids overflow for large |z|
    losses = np.logaddexp(0.0, z) - labels * z
    penalty = 0.5 * l2 * float(np.dot(theta[:-1], theta[:-1]))
    return float(np.mean(losses)) + penalty


def logistic_gradient(
    theta: np.ndarray, features: np.ndarray, labels: np.ndarray, l2: float = 0.0
) -> np.ndarray:
    """Analytic gradient of ``logistic_loss`` with respect to ``theta``."""
    z = features @ theta[:-1] + theta[-1]
    residual = _sigmoid(z) - labels
    grad_w = features.T @ residual / len(labels) + l2 * theta[:-1]
    grad_b = float(np.mean(residual))
    return np.concatenate([grad_w, [grad_b]])


def train_weights(
    dataset: Sequence[tuple[AwarenessFeatures, bool]],
    params: TrainingParams = TrainingParams(),
) -> AwarenessWeights:
    """Fit the score weights by full-batch gradient descent from zero init.

    Deterministic for fixed params. Requires at least one example of each
    label and finite features.
    """
    weights, _ = train_weights_with_history(dataset, params)
    return weights


def train_weights_with_history(
    dataset: Sequence[tuple[AwarenessFeatures, bool]],
    params: TrainingParams = TrainingParams(),
) -> tuple[AwarenessWeights, list[float]]:
    """Like train_weights, also returning the per-iteration loss trace."""
    if len(dataset) < 2:
        raise ValueError(f"need at least 2 training examples, got {len(dataset)}")
    features = np.array(
        [
            [f.one_minus_rotation_factor, f.mean_eye_open, f.p_smile]
            for f, _ in dataset
        ],
        dtype=np.float64,
    )
    labels = np.array([1.0 if aware else 0.0 for _, aware in dataset])
    if not np.all(np.isfinite(features)):
        raise ValueError("training features must all be finite")
    if labels.min() == labels.max():
        raise ValueError("training set must contain both aware and not-aware examples")

    theta = np.zeros(4)
    history: list[float] = [logistic_loss(theta, features, labels, params.l2)]
    for _ in range(params.iterations):
        theta = theta - params.learning_rate * logistic_gradient(
            theta, features, labels, params.l2
        )
        history.append(logistic_loss(theta, features, labels, params.l2))
    weights = AwarenessWeights(
        w_r=float(theta[0]), w_e=float(theta[1]), w_s=float(theta[2]), bias_c=float(theta[3])
    )
    return weights, history


# --- weights file (flat key-value text, full precision) ---


def save_weights(
    path: str | Path, weights: AwarenessWeights, cfg: GazeConfig = GazeConfig()
) -> None:
    lines = [
        f"w_r = {weights.w_r!r}",
        f"w_e = {weights.w_e!r}",
        f"w_s = {weights.w_s!r}",
        f"c = {weights.bias_c!r}",
        f"tau_r_deg = {cfg.tau_r_deg!r}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_weights(path: str | Path) -> tuple[AwarenessWeights, GazeConfig]:
    values: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        try:
            values[key.strip()] = float(value.strip())
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad float {value.strip()!r}") from exc
    missing = {"w_r", "w_e", "w_s", "c", "tau_r_deg"} - values.keys()
    if missing:
        raise ValueError(f"{path}: missing weight keys: {sorted(missing)}")
    weights = AwarenessWeights(
        w_r=values["w_r"], w_e=values["w_e"], w_s=values["w_s"], bias_c=values["c"]
    )
    return weights, GazeConfig(tau_r_deg=values["tau_r_deg"])
