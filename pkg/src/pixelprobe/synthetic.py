"""Synthetic test stimuli: uniform fields, dark spots, seeded noise."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .image import Image
from .rng import SplitMix64

__all__ = ["uniform_image", "spot_image", "random_image"]

DEFAULT_BACKGROUND = 230
DEFAULT_SPOT_VALUE = 40
DEFAULT_SPOT_RADIUS = 6


def uniform_image(size: int = 64, value: int = DEFAULT_BACKGROUND) -> Image:
    """Uniform gray square image."""
    return Image.filled(size, size, (value, value, value))


def spot_image(
    size: int = 64,
    radius: int = DEFAULT_SPOT_RADIUS,
    background: int = DEFAULT_BACKGROUND,
    spot: int = DEFAULT_SPOT_VALUE,
) -> Image:
    """Light square image with a dark filled disc at its center.

    The disc covers every pixel within Euclidean distance ``radius`` of
    ``(size // 2, size // 2)``; the even-aligned center matches the
    stride-2 sampling lattice of the built-in scorer.
    """
    if radius < 1:
        raise ParameterError("spot radius must be >= 1")
    arr = np.full((size, size, 3), background, dtype=np.uint8)
    c = size // 2
    yy, xx = np.mgrid[0:size, 0:size]
    mask = (xx - c) ** 2 + (yy - c) ** 2 <= radius * radius
    arr[mask] = spot
    return Image(arr)


def random_image(width: int, height: int, seed: int) -> Image:
    """Seeded uniform-noise RGB image; one SplitMix64 draw per channel byte."""
    rng = SplitMix64(seed)
    flat = np.fromiter(
        (rng.below(256) for _ in range(width * height * 3)),
        dtype=np.uint8,
        count=width * height * 3,
    )
    return Image(flat.reshape(height, width, 3))
