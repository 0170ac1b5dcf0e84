"""Image values, single-pixel perturbation, and the quantized color grid.

Images are immutable 8-bit RGB rasters. All operations here are pure:
perturbation returns a fresh image, the source is never written to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from .errors import BoundsError, ImageIOError, ParameterError

__all__ = [
    "Image",
    "AttackVector",
    "ColorSet",
    "apply_attack",
    "color_grid",
    "neighborhood_mean",
    "load_image",
    "save_image",
]


@dataclass(frozen=True, eq=False)
class Image:
    """Fixed-size RGB raster with 8-bit channels.

    ``pixels`` has shape ``(height, width, 3)``, dtype uint8, and is
    marked read-only; build modified copies through :func:`apply_attack`
    or :meth:`with_pixel`.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ParameterError(
                f"pixels must have shape (height, width, 3), got {arr.shape}"
            )
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.integer) and arr.min() >= 0 and arr.max() <= 255:
                arr = arr.astype(np.uint8)
            else:
                raise ParameterError(
                    f"channel values must be integers in [0, 255], got dtype {arr.dtype}"
                )
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def pixel(self, x: int, y: int) -> tuple[int, int, int]:
        """Return (r, g, b) at column x, row y."""
        self._check_bounds(x, y)
        r, g, b = self.pixels[y, x]
        return int(r), int(g), int(b)

    def with_pixel(self, x: int, y: int, color: tuple[int, int, int]) -> "Image":
        """Copy of this image with one pixel replaced."""
        self._check_bounds(x, y)
        out = self.pixels.copy()
        out[y, x] = color
        return Image(out)

    def _check_bounds(self, x: int, y: int) -> None:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise BoundsError(
                f"pixel ({x}, {y}) out of bounds for {self.width}x{self.height} image"
            )

    @classmethod
    def filled(cls, width: int, height: int, color: tuple[int, int, int]) -> "Image":
        """Uniform image of the given color."""
        if width < 1 or height < 1:
            raise ParameterError("image dimensions must be positive")
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[:, :] = color
        return cls(arr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True)
class AttackVector:
    """A single-pixel perturbation candidate: position plus replacement color."""

    x: int
    y: int
    r: int
    g: int
    b: int

    def color(self) -> tuple[int, int, int]:
        return (self.r, self.g, self.b)


@dataclass(frozen=True, eq=False)
class ColorSet:
    """Quantized RGB grid: every channel takes multiples of ``step`` in [0, 255].

    ``colors`` holds the full Cartesian product, shape ``(n**3, 3)`` uint8,
    enumerated red-major (r outer, g middle, b inner, each ascending).
    """

    step: int
    values: np.ndarray
    colors: np.ndarray

    def __len__(self) -> int:
        return self.colors.shape[0]

    def __iter__(self):
        for row in self.colors:
            yield (int(row[0]), int(row[1]), int(row[2]))


def color_grid(step: int) -> ColorSet:
    """Build the quantized color set for a channel step.

    The per-channel values are ``{0, step, 2*step, ...}`` clamped to
    [0, 255]; 255 itself is included exactly when ``step`` divides 255.
    ``step=5`` yields 52 values per channel and 140,608 colors; ``step=1``
    yields the full 16,777,216-color space.
    """
    if not isinstance(step, (int, np.integer)) or isinstance(step, bool):
        raise ParameterError(f"step must be an integer, got {type(step).__name__}")
    if not (1 <= step <= 255):
        raise ParameterError(f"step must be in [1, 255], got {step}")
    values = np.arange(0, 256, step, dtype=np.uint8)
    n = len(values)
    r = np.repeat(values, n * n)
    g = np.tile(np.repeat(values, n), n)
    b = np.tile(values, n * n)
    colors = np.stack([r, g, b], axis=1)
    colors.flags.writeable = False
    values.flags.writeable = False
    return ColorSet(step=int(step), values=values, colors=colors)


def apply_attack(image: Image, v: AttackVector) -> Image:
    """Return ``image`` with pixel (v.x, v.y) replaced by (v.r, v.g, v.b)."""
    for name in ("r", "g", "b"):
        c = getattr(v, name)
        if not (0 <= c <= 255):
            raise BoundsError(f"channel {name}={c} outside [0, 255]")
    return image.with_pixel(v.x, v.y, v.color())


def neighborhood_mean(
    image: Image, x: int, y: int, radius: int = 1
) -> tuple[float, float, float]:
    """Per-channel mean of the pixels around (x, y).

    Averages every in-bounds pixel within Chebyshev distance ``radius``
    of the center, excluding the center itself; values stay on the raw
    [0, 255] scale. With the default radius this is the Moore
    neighborhood, clipped at image borders.
    """
    if radius < 1:
        raise ParameterError(f"radius must be >= 1, got {radius}")
    image._check_bounds(x, y)
    x0, x1 = max(0, x - radius), min(image.width, x + radius + 1)
    y0, y1 = max(0, y - radius), min(image.height, y + radius + 1)
    window = image.pixels[y0:y1, x0:x1].astype(np.float64)
    total = window.sum(axis=(0, 1))
    count = window.shape[0] * window.shape[1] - 1
    if count == 0:
        raise ParameterError("image has no pixels besides the center")
    total -= image.pixels[y, x]
    mean = total / count
    return (float(mean[0]), float(mean[1]), float(mean[2]))


def load_image(path) -> Image:
    """Load an 8-bit RGB PNG (alpha, if present, is dropped)."""
    try:
        with PILImage.open(path) as img:
            if img.mode not in ("RGB", "RGBA", "P"):
                raise ImageIOError(
                    f"{path}: unsupported image mode {img.mode!r} (need 8-bit RGB)"
                )
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except FileNotFoundError as e:
        raise ImageIOError(f"{path}: no such file") from e
    except UnidentifiedImageError as e:
        raise ImageIOError(f"{path}: not a recognized image file") from e
    return Image(arr)


def save_image(image: Image, path) -> None:
    """Write the image as an 8-bit RGB PNG."""
    pil = PILImage.fromarray(image.pixels, mode="RGB")
    try:
        pil.save(path, format="PNG")
    except OSError as e:
        raise ImageIOError(f"{path}: cannot write image: {e}") from e
