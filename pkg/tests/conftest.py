"""Shared fixtures and independent reference oracles.

The oracles here deliberately use different mechanics from the package code
(string interleaving for the geohash, plain inequality loops for range scans)
so agreement between the two is meaningful evidence, not an echo.
"""

from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "georace",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("georace")

_ORACLE_ALPHABET = "0123456789bcdefghjkmnpqrstuvwxyz"


def oracle_geohash(lon: float, lat: float, precision: int) -> str:
    """Reference geohash via per-axis bit strings and textual interleaving."""

    def axis_bits(value, lo, hi, nbits):
        out = []
        for _ in range(nbits):
            mid = (lo + hi) / 2.0
            if value >= mid:
                out.append("1")
                lo = mid
            else:
                out.append("0")
                hi = mid
        return "".join(out)

    total = 5 * precision
    lon_bits = axis_bits(lon, -180.0, 180.0, (total + 1) // 2)
    lat_bits = axis_bits(lat, -90.0, 90.0, total // 2)
    interleaved = "".join(
        a + b for a, b in itertools.zip_longest(lon_bits, lat_bits, fillvalue="")
    )
    return "".join(
        _ORACLE_ALPHABET[int(interleaved[i : i + 5], 2)] for i in range(0, total, 5)
    )


def oracle_scan(rows, box, trange):
    """Linear scan with closed comparisons, written from the definitions.

    rows: iterables of (tile_id, min_lon, max_lon, min_lat, max_lat, t0, t1).
    box: (min_lon, max_lon, min_lat, max_lat). trange: (t0, t1).
    """
    qlo_x, qhi_x, qlo_y, qhi_y = box
    qt0, qt1 = trange
    hits = set()
    for tile_id, lo_x, hi_x, lo_y, hi_y, t0, t1 in rows:
        if hi_x < qlo_x or qhi_x < lo_x:
            continue
        if hi_y < qlo_y or qhi_y < lo_y:
            continue
        if t1 < qt0 or qt1 < t0:
            continue
        hits.add(tile_id)
    return hits


def random_rows(n: int, seed: int, *, extent=(-170.0, 170.0, -80.0, 80.0), tmax=10_000):
    """Random entry rows, including boundary-aligned and degenerate shapes."""
    rng = random.Random(seed)
    lo_x, hi_x, lo_y, hi_y = extent
    rows = []
    for i in range(n):
        style = rng.random()
        if style < 0.2:
            # integer-aligned edges: exercises cell-boundary conventions
            x0 = float(rng.randrange(int(lo_x), int(hi_x)))
            y0 = float(rng.randrange(int(lo_y), int(hi_y)))
            w = float(rng.choice((0.25, 0.5, 1.0)))
            h = float(rng.choice((0.25, 0.5, 1.0)))
        elif style < 0.25:
            # degenerate: zero width and/or height
            x0 = rng.uniform(lo_x, hi_x)
            y0 = rng.uniform(lo_y, hi_y)
            w = 0.0 if rng.random() < 0.7 else rng.uniform(0.0, 2.0)
            h = 0.0
        else:
            x0 = rng.uniform(lo_x, hi_x - 3.0)
            y0 = rng.uniform(lo_y, hi_y - 3.0)
            w = rng.uniform(0.01, 3.0)
            h = rng.uniform(0.01, 3.0)
        t0 = rng.randrange(0, tmax)
        t1 = t0 + rng.randrange(0, tmax // 4)
        rows.append((f"tile_{i:05d}", x0, min(x0 + w, hi_x), y0, min(y0 + h, hi_y), t0, t1))
    return rows


def random_queries(n: int, seed: int, *, extent=(-170.0, 170.0, -80.0, 80.0), tmax=10_000):
    rng = random.Random(seed + 1)
    lo_x, hi_x, lo_y, hi_y = extent
    queries = []
    for _ in range(n):
        if rng.random() < 0.2:
            x0 = float(rng.randrange(int(lo_x), int(hi_x) - 4))
            y0 = float(rng.randrange(int(lo_y), int(hi_y) - 4))
            w = float(rng.choice((0.25, 1.0, 2.0, 4.0)))
            h = float(rng.choice((0.25, 1.0, 2.0, 4.0)))
        else:
            x0 = rng.uniform(lo_x, hi_x - 5.0)
            y0 = rng.uniform(lo_y, hi_y - 5.0)
            w = rng.uniform(0.0, 5.0)
            h = rng.uniform(0.0, 5.0)
        t0 = rng.randrange(0, tmax)
        t1 = t0 + rng.randrange(0, tmax)
        queries.append(((x0, x0 + w, y0, y0 + h), (t0, t1)))
    return queries


def make_entries(rows):
    """Oracle row tuples -> IndexEntry objects."""
    from georace.geo import BoundingBox, TimeRange
    from georace.indexes import IndexEntry

    return [
        IndexEntry(r[0], BoundingBox(r[1], r[2], r[3], r[4]), TimeRange(r[5], r[6]))
        for r in rows
    ]


@pytest.fixture(scope="session")
def acceptance_report():
    """Collects one pass/fail line per acceptance criterion, printed at the end."""
    lines = []
    yield lines
    if lines:
        print("\n" + "\n".join(lines))
