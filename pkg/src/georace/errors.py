"""Exception hierarchy for the georace package.

Every error raised by this package derives from GeoRaceError so callers can
catch one base type. ValidationError doubles as ValueError because malformed
coordinates and malformed CLI/HTTP arguments are the same failure mode.
"""

from __future__ import annotations


class GeoRaceError(Exception):
    """Base class for all errors raised by georace."""


class ValidationError(GeoRaceError, ValueError):
    """Malformed input: coordinates, ranges, request bodies, CLI arguments."""


class DuplicateTileError(GeoRaceError):
    """A tile with the same tile_id was already ingested."""


class ReplicationError(GeoRaceError):
    """Not enough live nodes to satisfy the replication factor."""


class UnavailableError(GeoRaceError):
    """All replicas holding the requested data are down."""


class CorruptionError(GeoRaceError):
    """Stored bytes do not match their recorded checksum, or metadata is inconsistent."""


class UnknownNodeError(GeoRaceError):
    """A node id that the store does not know."""


class QueryTimeoutError(GeoRaceError):
    """A query did not complete within its deadline."""


class IndexBuildError(GeoRaceError):
    """An index build failed; the message names the failing index kind."""


class IndexMismatchError(GeoRaceError):
    """Verification mode found disagreeing index results; names the odd ones out."""
