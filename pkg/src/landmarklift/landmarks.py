"""Ordered landmark sets in 2D and 3D.

A landmark set is an ordered array of points tied to a named topology.  The
topology id encodes the expected point count (``face72``, ``face51``, ...),
so sets from different generators or models cannot be mixed accidentally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, NonFiniteError, TopologyError

# Preset landmark counts mirroring the two common face annotation standards.
TOPOLOGY_PRESETS = {"face72": 72, "face51": 51}


def topology_for_count(n: int) -> str:
    """Return the canonical topology id for an ``n``-point face layout."""
    return f"face{n}"


def topology_count(topology_id: str) -> int:
    """Parse the point count out of a topology id.

    Raises:
        TopologyError: if the id does not encode a count.
    """
    if topology_id in TOPOLOGY_PRESETS:
        return TOPOLOGY_PRESETS[topology_id]
    if topology_id.startswith("face") and topology_id[4:].isdigit():
        return int(topology_id[4:])
    raise TopologyError(f"cannot infer landmark count from topology id {topology_id!r}")


def _validate(points: np.ndarray, dim: int, topology_id: str) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != dim:
        raise TopologyError(
            f"expected an (n, {dim}) point array, got shape {points.shape}"
        )
    if not np.all(np.isfinite(points)):
        raise NonFiniteError("landmark coordinates must be finite")
    expected = topology_count(topology_id)
    if points.shape[0] != expected:
        raise TopologyError(
            f"topology {topology_id!r} expects {expected} points, got {points.shape[0]}"
        )
    return points


@dataclass(frozen=True)
class LandmarkSet2D:
    """Ordered 2D landmarks in normalized image units."""

    points: np.ndarray
    topology_id: str | None = field(default=None)

    def __post_init__(self):
        if self.topology_id is None:
            object.__setattr__(
                self, "topology_id", topology_for_count(np.asarray(self.points).shape[0])
            )
        object.__setattr__(self, "points", _validate(self.points, 2, self.topology_id))

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class LandmarkSet3D:
    """Ordered 3D landmarks in normalized model units."""

    points: np.ndarray
    topology_id: str | None = field(default=None)

    def __post_init__(self):
        if self.topology_id is None:
            object.__setattr__(
                self, "topology_id", topology_for_count(np.asarray(self.points).shape[0])
            )
        object.__setattr__(self, "points", _validate(self.points, 3, self.topology_id))

    def __len__(self) -> int:
        return self.points.shape[0]


def normalize_points(points: np.ndarray) -> np.ndarray:
    """Shift to zero mean and scale to unit root-mean-square radius.

    The RMS radius is ``sqrt(mean(|p - centroid|^2))``; after normalization it
    equals 1 exactly, which makes coordinates comparable across generators and
    projection regimes.

    Raises:
        DegenerateInputError: if all points coincide (zero RMS radius).
    """
    points = np.asarray(points, dtype=np.float64)
    centered = points - points.mean(axis=0)
    rms = np.sqrt(np.mean(np.sum(centered**2, axis=1)))
    if rms == 0.0 or not np.isfinite(rms):
        raise DegenerateInputError("cannot normalize a set of coincident points")
    return centered / rms
