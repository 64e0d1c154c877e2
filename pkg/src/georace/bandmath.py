"""Pixel-wise vegetation indices and geographic mosaic assembly.

All three indices need only the NIR and Red bands:

    NDVI = (NIR - Red) / (NIR + Red)
    RVI  = NIR / Red
    DVI  = NIR - Red

A pixel becomes no-data (NaN) when either input is no-data, either input is
a negative reflectance, or the denominator is zero. Grids are float32
throughout; no-data propagates as NaN.

Mosaics live on a north-up grid aligned to the query box: row 0 is the
northern edge, column 0 the western edge. Tiles are painted in catalog
order (capture_time, then tile_id, ascending), so on overlaps the newest
capture wins, ties resolved by tile_id.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError
from .geo import BoundingBox
from .store import BandGrid, TileMetadata


class InfoKind(Enum):
    NDVI = "ndvi"
    RVI = "rvi"
    DVI = "dvi"

    @classmethod
    def parse(cls, name: "InfoKind | str") -> "InfoKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValidationError(f"unknown info kind {name!r} (expected one of {valid})") from None


def compute_index(kind: InfoKind, nir: BandGrid, red: BandGrid) -> BandGrid:
    """One vegetation index, pixel-wise, dimensions preserved."""
    if not isinstance(kind, InfoKind):
        kind = InfoKind.parse(kind)
    if nir.values.shape != red.values.shape:
        raise ValidationError(
            f"band dimensions disagree: NIR {nir.values.shape} vs Red {red.values.shape}"
        )
    n = nir.values.astype(np.float32)
    r = red.values.astype(np.float32)
    invalid = np.isnan(n) | np.isnan(r) | (n < 0.0) | (r < 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind is InfoKind.NDVI:
            denom = n + r
            out = np.where(denom == 0.0, np.nan, (n - r) / denom)
        elif kind is InfoKind.RVI:
            out = np.where(r == 0.0, np.nan, n / r)
        else:
            out = n - r
    out = np.where(invalid, np.nan, out).astype(np.float32)
    return BandGrid(kind.value.upper(), out)


@dataclass(frozen=True, eq=False)
class Mosaic:
    """A query-shaped output grid assembled from tile results."""

    bbox: BoundingBox
    values: np.ndarray  # float32, NaN = no-data
    pixel_size_deg: float
    provenance: tuple[str, ...]

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 2:
            raise ValidationError("mosaic grid must be 2-D")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)
        if self.pixel_size_deg <= 0:
            raise ValidationError("pixel size must be positive")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def no_data(self) -> np.ndarray:
        return np.isnan(self.values)


def _pixel_size(meta: TileMetadata, grid: BandGrid) -> tuple[float, float]:
    return (
        meta.bbox.width / grid.cols,
        meta.bbox.height / grid.rows,
    )


def empty_mosaic(bbox: BoundingBox, pixel_size_deg: float) -> Mosaic:
    rows = max(1, round(bbox.height / pixel_size_deg))
    cols = max(1, round(bbox.width / pixel_size_deg))
    values = np.full((rows, cols), np.nan, dtype=np.float32)
    return Mosaic(bbox, values, pixel_size_deg, ())


def assemble_mosaic(
    results: list[tuple[TileMetadata, BandGrid]],
    query_bbox: BoundingBox,
    *,
    pixel_size_deg: float | None = None,
) -> Mosaic:
    """Paint per-tile grids into a query-shaped mosaic.

    results must already be in catalog order; painting in that order makes
    the newest capture win overlapping pixels. Pixels no tile covers stay
    no-data. All tiles must share one pixel size (no resampling).
    """
    if not results:
        if pixel_size_deg is None:
            raise ValidationError("pixel size required for an empty mosaic")
        return empty_mosaic(query_bbox, pixel_size_deg)

    sizes = set()
    for meta, grid in results:
        sx, sy = _pixel_size(meta, grid)
        sizes.add((round(sx, 12), round(sy, 12)))
    if len(sizes) != 1:
        raise ValidationError(f"tiles disagree on pixel size: {sorted(sizes)}")
    size_x, size_y = next(iter(sizes))
    if abs(size_x - size_y) > 1e-9:
        raise ValidationError(f"pixels must be square, got {size_x} x {size_y}")
    if pixel_size_deg is not None and abs(size_x - pixel_size_deg) > 1e-9:
        raise ValidationError(
            f"tiles have pixel size {size_x}, expected {pixel_size_deg}"
        )
    px = size_x

    rows = max(1, round(query_bbox.height / px))
    cols = max(1, round(query_bbox.width / px))
    canvas = np.full((rows, cols), np.nan, dtype=np.float32)
    ordered = sorted(results, key=lambda mg: (mg[0].capture_time, mg[0].tile_id))
    provenance = []
    for meta, grid in ordered:
        if not _paint(canvas, query_bbox, px, meta, grid):
            continue
        provenance.append(meta.tile_id)
    return Mosaic(query_bbox, canvas, px, tuple(provenance))


def _paint(
    canvas: np.ndarray,
    query_bbox: BoundingBox,
    px: float,
    meta: TileMetadata,
    grid: BandGrid,
) -> bool:
    """Copy the overlap between one tile and the canvas; True if any pixel."""
    rows, cols = canvas.shape
    # tile's top-left pixel lands at this canvas offset (may be negative)
    off_r = round((query_bbox.max_lat - meta.bbox.max_lat) / px)
    off_c = round((meta.bbox.min_lon - query_bbox.min_lon) / px)
    src = grid.values
    r0 = max(0, off_r)
    c0 = max(0, off_c)
    r1 = min(rows, off_r + src.shape[0])
    c1 = min(cols, off_c + src.shape[1])
    if r0 >= r1 or c0 >= c1:
        return False
    canvas[r0:r1, c0:c1] = src[r0 - off_r : r1 - off_r, c0 - off_c : c1 - off_c]
    return True
