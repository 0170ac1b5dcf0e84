"""PNG heatmap rendering with a fixed three-stop diverging gradient.

Field values are normalized linearly to [0, 1] (over the field's own
range, or an explicit one for cross-image comparability) and mapped
through navy (0) -> white (0.5) -> dark red (1), interpolated per
channel. Constant fields render mid-gradient.
"""

from __future__ import annotations

import numpy as np

from .analysis import PlacementGrid
from .confmap import ConfidenceMap
from .errors import ParameterError
from .image import Image

__all__ = ["GRADIENT_STOPS", "colormap", "render_field", "render_map", "render_counts"]

GRADIENT_STOPS = ((0, 0, 128), (255, 255, 255), (200, 0, 0))

MAP_MODES = ("min", "max", "avg", "swing")


def colormap(t: np.ndarray) -> np.ndarray:
    """Map normalized values in [0, 1] to RGB; endpoints hit the stops exactly."""
    t = np.asarray(t, dtype=np.float64)
    lo, mid, hi = (np.array(s, dtype=np.float64) for s in GRADIENT_STOPS)
    s_low = np.clip(t * 2.0, 0.0, 1.0)[..., None]
    s_high = np.clip(t * 2.0 - 1.0, 0.0, 1.0)[..., None]
    rgb = np.where(
        t[..., None] <= 0.5,
        lo + s_low * (mid - lo),
        mid + s_high * (hi - mid),
    )
    return np.rint(rgb).astype(np.uint8)


def render_field(
    field: np.ndarray,
    value_range: tuple[float, float] | None = None,
    scale: int = 1,
) -> Image:
    """Render a 2-D value field as a heatmap image.

    With ``value_range=(lo, hi)`` the normalization is fixed rather than
    per-field, so renders of different maps are visually comparable.
    ``scale`` upsamples by integer pixel replication.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2:
        raise ParameterError(f"field must be 2-D, got shape {field.shape}")
    if scale < 1:
        raise ParameterError(f"scale must be >= 1, got {scale}")
    if value_range is None:
        lo, hi = float(field.min()), float(field.max())
    else:
        lo, hi = float(value_range[0]), float(value_range[1])
        if hi <= lo:
            raise ParameterError(f"bad value range: lo={lo} hi={hi}")
    if hi == lo:
        t = np.full(field.shape, 0.5)
    else:
        t = np.clip((field - lo) / (hi - lo), 0.0, 1.0)
    rgb = colormap(t)
    if scale > 1:
        rgb = np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)
    return Image(rgb)


def render_map(
    cmap: ConfidenceMap,
    mode: str,
    value_range: tuple[float, float] | None = None,
    scale: int = 1,
) -> Image:
    """Render one of a confidence map's fields (min, max, avg, swing)."""
    if mode == "min":
        field = cmap.min_map
    elif mode == "max":
        field = cmap.max_map
    elif mode == "avg":
        field = cmap.avg_map
    elif mode == "swing":
        field = cmap.swing()
    else:
        raise ParameterError(f"unknown render mode {mode!r} (expected {MAP_MODES})")
    return render_field(field, value_range=value_range, scale=scale)


def render_counts(
    grid: PlacementGrid,
    value_range: tuple[float, float] | None = None,
    scale: int = 1,
) -> Image:
    """Render a placement grid's counts as a heatmap."""
    return render_field(grid.counts.astype(np.float64), value_range=value_range, scale=scale)
