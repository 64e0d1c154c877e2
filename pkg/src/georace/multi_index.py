"""Build all three index kinds from one entry snapshot.

Builds run in parallel worker processes when the machine has more than one
CPU; on a single-CPU host the executor degenerates to an in-process serial
loop (process workers would only add fork and pickling overhead to the same
sequential schedule). Per-kind build wall times and serialized sizes are
recorded for the overhead bench either way.
"""

from __future__ import annotations

import hashlib
import os
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from multiprocessing import get_context

from .errors import IndexBuildError, ValidationError
from .geo import BoundingBox, TimeRange
from .indexes import (
    IndexConfig,
    IndexEntry,
    IndexKind,
    RangeIndex,
    _pack_entries,
    _rows_from_entries,
    build_index,
)

DEFAULT_REPLICAS = ("node_00", "node_01", "node_02")

_ENSEMBLE = (IndexKind.GEOHASH.value, IndexKind.QUADTREE.value, IndexKind.ORTHOLIST.value)


@dataclass(frozen=True)
class BuildStats:
    kind: str
    build_seconds: float
    serialized_bytes: int


class MultiIndex:
    """The three equivalent indexes plus snapshot/replica bookkeeping."""

    def __init__(
        self,
        indexes: dict[str, RangeIndex],
        snapshot: str,
        replica_assignment: dict[str, str],
        build_wall_seconds: float,
    ):
        self.indexes = indexes
        self.snapshot = snapshot
        self.replica_assignment = replica_assignment
        self.build_wall_seconds = build_wall_seconds
        self.build_stats = tuple(
            BuildStats(kind, idx.build_seconds, idx.serialized_size)
            for kind, idx in indexes.items()
        )

    def __len__(self) -> int:
        return len(next(iter(self.indexes.values())))

    def kinds(self) -> tuple[str, ...]:
        return tuple(self.indexes)

    def to_bytes(self) -> bytes:
        """Container blob: per-kind length-prefixed serializations."""
        out = bytearray(b"GXMX")
        out += struct.pack("<HB", 1, len(self.indexes))
        for kind, idx in self.indexes.items():
            raw_kind = kind.encode("ascii")
            blob = idx.to_bytes()
            out += struct.pack("<B", len(raw_kind))
            out += raw_kind
            out += struct.pack("<Q", len(blob))
            out += blob
        return bytes(out)

    @property
    def serialized_size(self) -> int:
        return len(self.to_bytes())


def snapshot_stamp(entries) -> str:
    """Content hash identifying an entry snapshot."""
    return hashlib.sha256(_pack_entries(_rows_from_entries(entries))).hexdigest()[:16]


def _build_one(kind: str, entries: list[IndexEntry], config: IndexConfig) -> RangeIndex:
    return build_index(kind, entries, config)


def build_all(
    entries,
    *,
    config: IndexConfig | None = None,
    replicas: tuple[str, str, str] = DEFAULT_REPLICAS,
    executor: str = "auto",
    max_workers: int = 3,
) -> MultiIndex:
    """Build the GeoHash, QuadTree, and OrthoList indexes from one snapshot."""
    if executor not in ("auto", "serial", "process"):
        raise ValidationError(f"executor must be auto|serial|process, got {executor!r}")
    if len(replicas) != 3 or len(set(replicas)) != 3:
        raise ValidationError("exactly three distinct replica node ids required")
    config = config or IndexConfig()
    entries = list(entries)
    rows = _rows_from_entries(entries)  # validates + duplicate check once
    stamp = hashlib.sha256(_pack_entries(rows)).hexdigest()[:16]

    use_processes = executor == "process" or (
        executor == "auto" and (os.cpu_count() or 1) >= 2 and max_workers >= 2
    )
    started = time.perf_counter()
    built: dict[str, RangeIndex] = {}
    if use_processes:
        ctx = get_context("fork")
        with ProcessPoolExecutor(max_workers=min(max_workers, 3), mp_context=ctx) as pool:
            futures = {
                kind: pool.submit(_build_one, kind, entries, config) for kind in _ENSEMBLE
            }
            for kind, fut in futures.items():
                try:
                    built[kind] = fut.result()
                except Exception as exc:
                    raise IndexBuildError(f"{kind}: {exc}") from exc
    else:
        for kind in _ENSEMBLE:
            try:
                built[kind] = _build_one(kind, entries, config)
            except Exception as exc:
                raise IndexBuildError(f"{kind}: {exc}") from exc
    wall = time.perf_counter() - started

    for kind, idx in built.items():
        if hashlib.sha256(_pack_entries(idx.rows)).hexdigest()[:16] != stamp:
            raise IndexBuildError(f"{kind}: built from a different entry snapshot")

    assignment = {kind: replicas[i] for i, kind in enumerate(_ENSEMBLE)}
    return MultiIndex(built, stamp, assignment, wall)


def entries_from_rows(rows) -> list[IndexEntry]:
    """Rebuild IndexEntry objects from packed row tuples."""
    return [
        IndexEntry(r[0], BoundingBox(r[1], r[2], r[3], r[4]), TimeRange(r[5], r[6]))
        for r in rows
    ]
