"""Chromatic, spatial, placement, and parity analyses of attack records.

Everything operates on in-memory collections of :class:`AttackRecord`
(or a :class:`ConfidenceMap` for the checkerboard statistic) and exports
plain CSV. No clustering or hypothesis testing happens here; the outputs
are the raw materials for plots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .attack import AttackRecord
from .confmap import ConfidenceMap
from .errors import DataError, EmptyCollectionError

__all__ = [
    "ChromaticPoint",
    "SpatialStats",
    "ParityReport",
    "PlacementGrid",
    "chromatic_rmse",
    "chromatic_scatter",
    "spatial_stats",
    "placement_heatmap",
    "parity_analysis",
    "checkerboard_score",
    "write_chromatic_csv",
    "write_spatial_csv",
    "write_parity_csv",
    "write_placement_csv",
]

SPATIAL_VARIABLES = ("X", "Y", "Red", "Green", "Blue")
PARITY_CLASSES = ("even-even", "even-odd", "odd-even", "odd-odd")


@dataclass(frozen=True)
class ChromaticPoint:
    """One scatter point: color distance vs score movement."""

    h: float
    original_score: float
    modified_score: float
    delta: float


@dataclass(frozen=True)
class SpatialStats:
    """Mean / median / population SD per variable (X, Y, Red, Green, Blue)."""

    mean: dict[str, float]
    median: dict[str, float]
    sd: dict[str, float]
    count: int


@dataclass(frozen=True)
class ParityReport:
    """Attack-coordinate parity classes: counts and fractions of total."""

    counts: dict[str, int]
    fractions: dict[str, float]
    total: int


@dataclass(frozen=True, eq=False)
class PlacementGrid:
    """Counts of attack locations over a width x height pixel grid."""

    counts: np.ndarray  # (height, width) int64

    @property
    def width(self) -> int:
        return self.counts.shape[1]

    @property
    def height(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, PlacementGrid):
            return NotImplemented
        return bool(np.array_equal(self.counts, other.counts))


def chromatic_rmse(
    vector_color: Sequence[float], neighborhood_mean: Sequence[float]
) -> float:
    """Root-mean-square channel distance on [0,1]-scaled channels.

    Symmetric in its arguments; 0 for identical colors, 1 for
    black-vs-white.
    """
    total = 0.0
    for c, m in zip(vector_color, neighborhood_mean):
        d = (c - m) / 255.0
        total += d * d
    return math.sqrt(total / 3.0)


def chromatic_scatter(records: Sequence[AttackRecord]) -> list[ChromaticPoint]:
    """One point per record: h against the record's score movement."""
    points = []
    for rec in records:
        h = chromatic_rmse(rec.vector.color(), rec.neighborhood_mean)
        points.append(
            ChromaticPoint(
                h=h,
                original_score=rec.original_score,
                modified_score=rec.modified_score,
                delta=rec.modified_score - rec.original_score,
            )
        )
    return points


def _record_variables(rec: AttackRecord) -> tuple[int, int, int, int, int]:
    v = rec.vector
    return (v.x, v.y, v.r, v.g, v.b)


def spatial_stats(records: Sequence[AttackRecord]) -> SpatialStats:
    """Mean, median, and population standard deviation per variable.

    Median for an even record count is the midpoint of the two central
    order statistics; the SD divides by N (population form).
    """
    if not records:
        raise EmptyCollectionError("spatial_stats needs at least one record")
    data = np.array([_record_variables(r) for r in records], dtype=np.float64)
    mean, median, sd = {}, {}, {}
    for i, name in enumerate(SPATIAL_VARIABLES):
        col = data[:, i]
        mean[name] = float(col.mean())
        median[name] = float(np.median(col))
        sd[name] = float(col.std(ddof=0))
    return SpatialStats(mean=mean, median=median, sd=sd, count=len(records))


def placement_heatmap(
    records: Sequence[AttackRecord],
    width: int,
    height: int,
    success_filter: Callable[[AttackRecord], bool] | None = None,
) -> PlacementGrid:
    """Count attack locations on a pixel grid, optionally filtered."""
    counts = np.zeros((height, width), dtype=np.int64)
    for i, rec in enumerate(records):
        if success_filter is not None and not success_filter(rec):
            continue
        x, y = rec.vector.x, rec.vector.y
        if not (0 <= x < width and 0 <= y < height):
            raise DataError(
                f"record {i} (image_id={rec.image_id!r}) has coordinates "
                f"({x}, {y}) outside the {width}x{height} grid"
            )
        counts[y, x] += 1
    return PlacementGrid(counts=counts)


def parity_analysis(records: Sequence[AttackRecord]) -> ParityReport:
    """Classify each record's (x, y) by coordinate parity."""
    if not records:
        raise EmptyCollectionError("parity_analysis needs at least one record")
    counts = {cls: 0 for cls in PARITY_CLASSES}
    for rec in records:
        key = f"{'even' if rec.vector.x % 2 == 0 else 'odd'}-" \
              f"{'even' if rec.vector.y % 2 == 0 else 'odd'}"
        counts[key] += 1
    total = len(records)
    fractions = {cls: counts[cls] / total for cls in PARITY_CLASSES}
    return ParityReport(counts=counts, fractions=fractions, total=total)


def checkerboard_score(cmap: ConfidenceMap) -> float:
    """Parity bias of the map's swing field.

    Returns ``(mean swing on the even-even lattice - mean swing on the
    other three parity classes combined) / global mean swing``; positive
    values mean even-even pixels carry outsized attack leverage. Defined
    as 0 for maps with no swing anywhere (and for degenerate grids with
    no odd-parity pixels at all).
    """
    swing = cmap.swing()
    global_mean = float(swing.mean())
    if global_mean == 0.0:
        return 0.0
    ee = swing[0::2, 0::2]
    rest_count = swing.size - ee.size
    if rest_count == 0:
        return 0.0
    ee_mean = float(ee.mean())
    rest_mean = (float(swing.sum()) - float(ee.sum())) / rest_count
    return (ee_mean - rest_mean) / global_mean


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------


def write_chromatic_csv(points: Sequence[ChromaticPoint], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("h,original,modified,delta\n")
        for p in points:
            f.write(f"{p.h!r},{p.original_score!r},{p.modified_score!r},{p.delta!r}\n")


def write_spatial_csv(stats: SpatialStats, path) -> None:
    """Table layout: one row per measure, one column per variable."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("measure," + ",".join(SPATIAL_VARIABLES) + "\n")
        for label, values in (
            ("Mean", stats.mean),
            ("Median", stats.median),
            ("SD", stats.sd),
        ):
            f.write(label + "," + ",".join(repr(values[v]) for v in SPATIAL_VARIABLES) + "\n")


def write_parity_csv(report: ParityReport, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("class,count,fraction\n")
        for cls in PARITY_CLASSES:
            f.write(f"{cls},{report.counts[cls]},{report.fractions[cls]!r}\n")
        f.write(f"total,{report.total},1.0\n")


def write_placement_csv(grid: PlacementGrid, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("x,y,count\n")
        for p in range(grid.width * grid.height):
            y, x = divmod(p, grid.width)
            f.write(f"{x},{y},{int(grid.counts[y, x])}\n")


def read_placement_csv(path) -> PlacementGrid:
    """Load an `x,y,count` grid; dimensions come from the covered pixels."""
    from .errors import FormatError

    entries = []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != "x,y,count":
            raise FormatError(f"{path}:1: expected header 'x,y,count', got {header!r}")
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            try:
                x, y, count = (int(v) for v in parts)
            except ValueError as e:
                raise FormatError(f"{path}:{lineno}: malformed row {line.strip()!r}") from e
            if x < 0 or y < 0 or count < 0:
                raise FormatError(f"{path}:{lineno}: negative value in {line.strip()!r}")
            entries.append((x, y, count))
    if not entries:
        raise FormatError(f"{path}: placement grid has no rows")
    width = max(x for x, _, _ in entries) + 1
    height = max(y for _, y, _ in entries) + 1
    counts = np.zeros((height, width), dtype=np.int64)
    for x, y, count in entries:
        counts[y, x] += count
    return PlacementGrid(counts=counts)
