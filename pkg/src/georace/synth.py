"""Deterministic synthetic corpora and query workloads.

Tiles are laid out on a footprint grid (fixed edge length, default 0.25
degrees) and revisited: tile i covers footprint ``i % footprints`` at
revisit ``i // footprints``, so stacked captures of the same footprint
exist as soon as count exceeds the footprint count. Capture times are
unique per tile, which keeps mosaic overlap resolution deterministic.

Everything is a pure function of the config (including the seed), so the
same config always produces byte-identical scenes and workloads.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from . import formats
from .errors import ValidationError
from .geo import BoundingBox, TimeRange, derive_tile_id
from .indexes import IndexEntry
from .store import DEFAULT_BAND_LABELS, RasterScene

DEFAULT_SATELLITES = ("landsat8", "gaofen1")


@dataclass(frozen=True)
class SceneSpec:
    """Layout and content parameters for a synthetic corpus."""

    count: int
    seed: int = 0
    size_px: int = 256
    tile_edge_deg: float = 0.25
    origin_lon: float = 100.0
    origin_lat: float = 20.0
    revisits: int = 4
    start_time: int = 1_577_836_800  # 2020-01-01T00:00:00Z
    revisit_step: int = 86_400
    band_labels: tuple[str, ...] = DEFAULT_BAND_LABELS
    satellites: tuple[str, ...] = DEFAULT_SATELLITES
    nodata_fraction: float = 0.0

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValidationError("count must be >= 1")
        if self.size_px < 1:
            raise ValidationError("size_px must be >= 1")
        if self.tile_edge_deg <= 0:
            raise ValidationError("tile_edge_deg must be positive")
        if self.revisits < 1:
            raise ValidationError("revisits must be >= 1")
        if not 0.0 <= self.nodata_fraction < 1.0:
            raise ValidationError("nodata_fraction must be in [0, 1)")
        if "NIR" not in self.band_labels or "Red" not in self.band_labels:
            raise ValidationError("band_labels must include 'NIR' and 'Red'")

    @property
    def footprints(self) -> int:
        return math.ceil(self.count / self.revisits)

    @property
    def grid_cols(self) -> int:
        return math.ceil(math.sqrt(self.footprints))

    @property
    def grid_rows(self) -> int:
        return math.ceil(self.footprints / self.grid_cols)


def _layout(spec: SceneSpec, i: int) -> tuple[BoundingBox, int, str]:
    """Footprint bbox, capture time, and satellite of tile i."""
    fp = i % spec.footprints
    revisit = i // spec.footprints
    col = fp % spec.grid_cols
    row = fp // spec.grid_cols
    edge = spec.tile_edge_deg
    bbox = BoundingBox(
        spec.origin_lon + col * edge,
        spec.origin_lon + (col + 1) * edge,
        spec.origin_lat + row * edge,
        spec.origin_lat + (row + 1) * edge,
    )
    capture = spec.start_time + revisit * spec.revisit_step + fp
    satellite = spec.satellites[fp % len(spec.satellites)]
    return bbox, capture, satellite


def corpus_extent(spec: SceneSpec) -> BoundingBox:
    """Union bbox of every footprint in the corpus."""
    edge = spec.tile_edge_deg
    return BoundingBox(
        spec.origin_lon,
        spec.origin_lon + spec.grid_cols * edge,
        spec.origin_lat,
        spec.origin_lat + spec.grid_rows * edge,
    )


def corpus_timespan(spec: SceneSpec) -> TimeRange:
    last_revisit = (spec.count - 1) // spec.footprints
    last_group = spec.count - spec.footprints * last_revisit
    latest = spec.start_time + last_revisit * spec.revisit_step + (last_group - 1)
    if last_revisit >= 1:
        full_group = spec.start_time + (last_revisit - 1) * spec.revisit_step + spec.footprints - 1
        latest = max(latest, full_group)
    return TimeRange(spec.start_time, latest)


def generate_entries(spec: SceneSpec) -> list[IndexEntry]:
    """Index entries only (no pixels) — cheap input for index benchmarks."""
    out = []
    for i in range(spec.count):
        bbox, capture, satellite = _layout(spec, i)
        tid = derive_tile_id(bbox, capture, satellite)
        out.append(IndexEntry(tid, bbox, TimeRange(capture, capture)))
    return out


def _scene_pixels(spec: SceneSpec, i: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng([spec.seed, i])
    shape = (spec.size_px, spec.size_px)
    grids: dict[str, np.ndarray] = {}
    for label in spec.band_labels:
        if label == "NIR":
            grid = rng.uniform(0.2, 0.9, shape)
        elif label == "Red":
            grid = rng.uniform(0.05, 0.6, shape)
        else:
            grid = rng.uniform(0.0, 1.0, shape)
        grids[label] = grid.astype(np.float32)
    if spec.nodata_fraction > 0.0:
        mask = rng.random(shape) < spec.nodata_fraction
        for grid in grids.values():
            grid[mask] = np.nan
    return grids


def generate_scenes(spec: SceneSpec) -> Iterator[RasterScene]:
    for i in range(spec.count):
        bbox, capture, satellite = _layout(spec, i)
        grids = _scene_pixels(spec, i)
        yield RasterScene(
            bbox=bbox,
            capture_time=capture,
            satellite=satellite,
            bands=tuple((label, grids[label]) for label in spec.band_labels),
        )


def write_scenes(spec: SceneSpec, out_dir) -> list[Path]:
    """One .npz per scene, named by position; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, scene in enumerate(generate_scenes(spec)):
        meta = formats.scene_meta_dict(
            scene.bbox, scene.capture_time, scene.satellite, list(scene.band_labels)
        )
        path = out_dir / f"scene_{i:05d}.npz"
        formats.save_scene_npz(path, dict(scene.bands), meta)
        paths.append(path)
    return paths


@dataclass(frozen=True)
class WorkloadSpec:
    """Rectangular query workload over a corpus extent.

    Query edges are uniform in [min_edge_tiles, max_edge_tiles] footprint
    widths; time windows start uniformly inside the corpus span and cover
    a uniform 10-100% of it.
    """

    count: int
    seed: int = 1
    min_edge_tiles: float = 1.0
    max_edge_tiles: float = 4.0

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValidationError("count must be >= 1")
        if not 0 < self.min_edge_tiles <= self.max_edge_tiles:
            raise ValidationError("edge bounds must satisfy 0 < min <= max")


def workload_queries(
    extent: BoundingBox,
    span: TimeRange,
    tile_edge_deg: float,
    workload: WorkloadSpec,
) -> list[tuple[BoundingBox, TimeRange]]:
    """Seeded random query rectangles + time windows over an extent."""
    rng = random.Random(workload.seed)
    queries = []
    for _ in range(workload.count):
        w = rng.uniform(workload.min_edge_tiles, workload.max_edge_tiles) * tile_edge_deg
        h = rng.uniform(workload.min_edge_tiles, workload.max_edge_tiles) * tile_edge_deg
        w = min(w, extent.width)
        h = min(h, extent.height)
        x0 = rng.uniform(extent.min_lon, extent.max_lon - w)
        y0 = rng.uniform(extent.min_lat, extent.max_lat - h)
        length = max(1, round(rng.uniform(0.1, 1.0) * (span.end - span.start)))
        t0 = rng.randint(span.start, max(span.start, span.end - length))
        queries.append(
            (BoundingBox(x0, x0 + w, y0, y0 + h), TimeRange(t0, min(span.end, t0 + length)))
        )
    return queries


def generate_queries(
    spec: SceneSpec, workload: WorkloadSpec
) -> list[tuple[BoundingBox, TimeRange]]:
    return workload_queries(
        corpus_extent(spec), corpus_timespan(spec), spec.tile_edge_deg, workload
    )
