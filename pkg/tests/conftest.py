"""Shared test fixtures and reference data."""

import numpy as np

from lenscue.image import ImageBuffer

# Recorded landmark readings with their expected rotational factor, score,
# and awareness label under the default weights.
REFERENCE_ROWS = [
    # (head_yaw_deg, p_eye_left, p_eye_right, p_smile, factor, score, aware)
    (-1.165, 0.996, 0.994, 0.182, 0.000, 0.3397, True),
    (-12.069, 0.195, 0.823, 0.997, -0.047, -0.6609, False),
    (-3.582, 0.997, 0.999, 0.012, 0.000, 0.4887, True),
    (-62.610, 0.141, 0.581, 0.540, 0.251, -0.3309, False),
]

# Published confusion tallies (tp, tn, fp, fn) and their metric triples.
REFERENCE_TALLIES = [
    ((113, 162, 88, 137), (0.562, 0.452, 0.501)),
    ((137, 145, 105, 113), (0.566, 0.548, 0.557)),
    ((189, 172, 78, 61), (0.708, 0.756, 0.731)),
]


def make_image(seed: int, height: int, width: int, channels: int = 3) -> ImageBuffer:
    rng = np.random.default_rng(seed)
    return ImageBuffer(rng.integers(0, 256, (height, width, channels), dtype=np.uint8))
