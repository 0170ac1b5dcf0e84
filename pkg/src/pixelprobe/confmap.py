"""Brute-force one-pixel confidence maps.

For every pixel, every color of a quantized grid is substituted and the
resulting scores reduced to per-pixel min / max / avg. Minima and maxima
are exact; the average is computed with ``math.fsum`` over the pixel's
full score list, so results are identical for every batch size and
worker count. Work is sharded by whole pixels, and a cursor checkpoint
(last completed pixel) makes long runs resumable.

Map file format "OPCM" (little-endian): magic ``OPCM``, u16 version = 1,
u16 color_step, u32 width, u32 height, f64 original_score, u32 scorer-id
length + UTF-8 bytes, then three width*height f64 arrays in row-major
order (min, max, avg).
"""

from __future__ import annotations

import hashlib
import math
import os
import queue
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import FormatError, ParameterError, PixelProbeError
from .image import AttackVector, ColorSet, Image
from .scorer import ScorerSpec, open_scorer

__all__ = [
    "ConfidenceMap",
    "MapComputationError",
    "enumerate_vectors",
    "vector_count",
    "compute_confidence_map",
    "save_map",
    "load_map",
    "export_map_csv",
]

_MAGIC = b"OPCM"
_VERSION = 1
_HEADER = "<HHIIdI"  # version, color_step, width, height, original_score, id length

DEFAULT_BATCH_SIZE = 4096
DEFAULT_CHECKPOINT_EVERY = 64


class MapComputationError(PixelProbeError):
    """Scoring failed mid-run; ``cursor`` is the pixel index to resume from."""

    def __init__(self, message: str, cursor: int):
        super().__init__(message)
        self.cursor = cursor


@dataclass(eq=False)
class ConfidenceMap:
    """Per-pixel score extrema and means for one image under one color grid."""

    width: int
    height: int
    original_score: float
    min_map: np.ndarray
    max_map: np.ndarray
    avg_map: np.ndarray
    color_step: int
    scorer_id: str

    def __post_init__(self):
        for name in ("min_map", "max_map", "avg_map"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (self.height, self.width):
                raise ParameterError(
                    f"{name} must have shape ({self.height}, {self.width}), got {arr.shape}"
                )
            setattr(self, name, arr)

    def swing(self) -> np.ndarray:
        """Per-pixel attack leverage: max - min."""
        return self.max_map - self.min_map

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConfidenceMap):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.original_score == other.original_score
            and self.color_step == other.color_step
            and self.scorer_id == other.scorer_id
            and np.array_equal(self.min_map, other.min_map)
            and np.array_equal(self.max_map, other.max_map)
            and np.array_equal(self.avg_map, other.avg_map)
        )


def vector_count(colorset: ColorSet, width: int, height: int) -> int:
    """Planned number of attack vectors: one per (pixel, color) pair."""
    return width * height * len(colorset)


def enumerate_vectors(
    colorset: ColorSet,
    width: int,
    height: int,
    start_pixel: int = 0,
    start_color: int = 0,
) -> Iterator[AttackVector]:
    """Yield every attack vector in canonical order.

    Pixels run row-major (outer), colors in grid order (inner). The
    ``start_pixel`` / ``start_color`` cursor restarts the stream from any
    point of a previous enumeration.
    """
    colors = colorset.colors
    first = start_color
    for p in range(start_pixel, width * height):
        y, x = divmod(p, width)
        for ci in range(first, len(colors)):
            c = colors[ci]
            yield AttackVector(x, y, int(c[0]), int(c[1]), int(c[2]))
        first = 0


def _image_digest(image: Image) -> str:
    h = hashlib.sha256()
    h.update(struct.pack("<II", image.width, image.height))
    h.update(image.pixels.tobytes())
    return h.hexdigest()


def _pixel_reduction(image: Image, scorer, colors: np.ndarray, x: int, y: int,
                     batch_size: int) -> tuple[float, float, float]:
    """Score every color substitution at one pixel; reduce to (min, max, avg)."""
    k = colors.shape[0]
    scores = np.empty(k, dtype=np.float64)
    base = image.pixels
    for c0 in range(0, k, batch_size):
        chunk = colors[c0 : c0 + batch_size]
        m = chunk.shape[0]
        batch = np.repeat(base[np.newaxis], m, axis=0)
        batch[:, y, x, :] = chunk
        scores[c0 : c0 + m] = scorer.score_batch([Image(batch[i]) for i in range(m)])
    return float(scores.min()), float(scores.max()), math.fsum(scores) / k


class _SessionPool:
    """Per-worker scorer sessions; builtin scoring shares one instance."""

    def __init__(self, spec: ScorerSpec, workers: int):
        self._own = []
        self._q = queue.SimpleQueue()
        if spec.kind == "builtin":
            shared = open_scorer(spec)  # stateless, safe to share
            self._own.append(shared)
            for _ in range(workers):
                self._q.put(shared)
        else:
            for _ in range(workers):
                s = open_scorer(spec)
                self._own.append(s)
                self._q.put(s)

    def acquire(self):
        return self._q.get()

    def release(self, s):
        self._q.put(s)

    def first(self):
        return self._own[0]

    def close(self):
        for s in self._own:
            s.close()


def compute_confidence_map(
    image: Image,
    spec: ScorerSpec,
    colorset: ColorSet,
    batch_size: int = DEFAULT_BATCH_SIZE,
    *,
    workers: int = 1,
    checkpoint_path=None,
    checkpoint_every: int = DEFAULT_CHECKPOINT_EVERY,
    resume: bool = False,
    progress=None,
) -> ConfidenceMap:
    """Brute-force the full confidence map for ``image``.

    The output is independent of ``batch_size`` and ``workers``. With a
    ``checkpoint_path``, a cursor checkpoint is written atomically after
    every ``checkpoint_every`` pixels; ``resume=True`` picks up from a
    compatible checkpoint (same image, grid, and scorer). ``progress``,
    if given, is called as ``progress(done_pixels, total_pixels)``.
    """
    if batch_size < 1:
        raise ParameterError(f"batch_size must be >= 1, got {batch_size}")
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")
    if checkpoint_every < 1:
        raise ParameterError(f"checkpoint_every must be >= 1, got {checkpoint_every}")

    w, h = image.width, image.height
    n_px = w * h
    digest = _image_digest(image)
    min_map = np.full((h, w), np.nan)
    max_map = np.full((h, w), np.nan)
    avg_map = np.full((h, w), np.nan)
    cursor = 0

    if resume and checkpoint_path is not None and os.path.exists(checkpoint_path):
        cursor, min_map, max_map, avg_map = _load_checkpoint(
            checkpoint_path, w, h, colorset.step, spec.scorer_id, digest
        )

    pool = _SessionPool(spec, workers)
    colors = colorset.colors
    try:
        original_score = float(pool.first().score_batch([image])[0])

        def one_pixel(p: int) -> tuple[float, float, float]:
            y, x = divmod(p, w)
            scorer = pool.acquire()
            try:
                return _pixel_reduction(image, scorer, colors, x, y, batch_size)
            finally:
                pool.release(scorer)

        executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            while cursor < n_px:
                chunk = range(cursor, min(cursor + checkpoint_every, n_px))
                try:
                    if executor is None:
                        results = [one_pixel(p) for p in chunk]
                    else:
                        results = list(executor.map(one_pixel, chunk))
                except PixelProbeError as e:
                    raise MapComputationError(
                        f"scorer failed while computing pixels {chunk.start}.."
                        f"{chunk.stop - 1}; resume from pixel cursor {cursor}: {e}",
                        cursor=cursor,
                    ) from e
                for p, (mn, mx, avg) in zip(chunk, results):
                    y, x = divmod(p, w)
                    min_map[y, x] = mn
                    max_map[y, x] = mx
                    avg_map[y, x] = avg
                cursor = chunk.stop
                if checkpoint_path is not None:
                    _write_checkpoint(
                        checkpoint_path, w, h, colorset.step, spec.scorer_id,
                        digest, cursor, min_map, max_map, avg_map,
                    )
                if progress is not None:
                    progress(cursor, n_px)
        finally:
            if executor is not None:
                executor.shutdown(wait=False, cancel_futures=True)
    finally:
        pool.close()

    return ConfidenceMap(
        width=w,
        height=h,
        original_score=original_score,
        min_map=min_map,
        max_map=max_map,
        avg_map=avg_map,
        color_step=colorset.step,
        scorer_id=spec.scorer_id,
    )


# ---------------------------------------------------------------------------
# Checkpoint file (npz with a cursor; atomic replace on write)
# ---------------------------------------------------------------------------


def _write_checkpoint(path, width, height, step, scorer_id, digest, cursor,
                      min_map, max_map, avg_map) -> None:
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as f:
        np.savez(
            f,
            format="pixelprobe-confmap-checkpoint",
            version=1,
            width=width,
            height=height,
            color_step=step,
            scorer_id=scorer_id,
            image_digest=digest,
            cursor=cursor,
            min_map=min_map,
            max_map=max_map,
            avg_map=avg_map,
        )
    os.replace(tmp, path)


def _load_checkpoint(path, width, height, step, scorer_id, digest):
    try:
        with np.load(path, allow_pickle=False) as z:
            if str(z["format"]) != "pixelprobe-confmap-checkpoint":
                raise FormatError(f"{path}: not a confmap checkpoint")
            if int(z["version"]) != 1:
                raise FormatError(f"{path}: unsupported checkpoint version")
            stored = {
                "width": int(z["width"]),
                "height": int(z["height"]),
                "color_step": int(z["color_step"]),
                "scorer_id": str(z["scorer_id"]),
                "image_digest": str(z["image_digest"]),
            }
            expected = {
                "width": width,
                "height": height,
                "color_step": step,
                "scorer_id": scorer_id,
                "image_digest": digest,
            }
            for key, want in expected.items():
                if stored[key] != want:
                    raise FormatError(
                        f"{path}: checkpoint {key} mismatch "
                        f"(checkpoint {stored[key]!r}, run {want!r})"
                    )
            return (
                int(z["cursor"]),
                np.array(z["min_map"]),
                np.array(z["max_map"]),
                np.array(z["avg_map"]),
            )
    except (OSError, ValueError, KeyError) as e:
        raise FormatError(f"{path}: unreadable checkpoint: {e}") from e


# ---------------------------------------------------------------------------
# OPCM map files and CSV export
# ---------------------------------------------------------------------------


def save_map(cmap: ConfidenceMap, path) -> None:
    """Write the map in the binary OPCM format (bit-exact round trip)."""
    sid = cmap.scorer_id.encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(
            struct.pack(
                _HEADER,
                _VERSION,
                cmap.color_step,
                cmap.width,
                cmap.height,
                cmap.original_score,
                len(sid),
            )
        )
        f.write(sid)
        for arr in (cmap.min_map, cmap.max_map, cmap.avg_map):
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_map(path) -> ConfidenceMap:
    """Read an OPCM map file; malformed input raises FormatError."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise FormatError(f"{path}: cannot read map file: {e}") from e
    if len(data) < 4 or data[:4] != _MAGIC:
        raise FormatError(f"{path}: bad magic, not an OPCM map file")
    head_size = struct.calcsize(_HEADER)
    if len(data) < 4 + head_size:
        raise FormatError(
            f"{path}: truncated map file: expected at least {4 + head_size} bytes, "
            f"got {len(data)}"
        )
    version, step, width, height, original, sid_len = struct.unpack_from(_HEADER, data, 4)
    if version != _VERSION:
        raise FormatError(f"{path}: unsupported map version {version}")
    grid_bytes = width * height * 8
    expected = 4 + head_size + sid_len + 3 * grid_bytes
    if len(data) != expected:
        raise FormatError(
            f"{path}: truncated map file: expected {expected} bytes, got {len(data)}"
        )
    offset = 4 + head_size
    scorer_id = data[offset : offset + sid_len].decode("utf-8")
    offset += sid_len
    grids = []
    for _ in range(3):
        arr = np.frombuffer(data, dtype="<f8", count=width * height, offset=offset)
        grids.append(arr.reshape(height, width).copy())
        offset += grid_bytes
    return ConfidenceMap(
        width=width,
        height=height,
        original_score=original,
        min_map=grids[0],
        max_map=grids[1],
        avg_map=grids[2],
        color_step=step,
        scorer_id=scorer_id,
    )


def export_map_csv(cmap: ConfidenceMap, path) -> None:
    """Write `x,y,min,max,avg`, one row per pixel, row-major."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("x,y,min,max,avg\n")
        for p in range(cmap.width * cmap.height):
            y, x = divmod(p, cmap.width)
            f.write(
                f"{x},{y},{float(cmap.min_map[y, x])!r},{float(cmap.max_map[y, x])!r},"
                f"{float(cmap.avg_map[y, x])!r}\n"
            )
