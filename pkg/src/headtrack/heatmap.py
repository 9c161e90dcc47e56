"""Trajectory heatmaps, track filtering, and statistical sampling.

A heatmap is a frame-sized grid that accumulates exposure time per pixel:
every track point stamps a filled circle centered on its box center, so
cell values count frames of exposure. Stationary false tracks show up as
a single bright circle, which the filtering stage removes via joint
length thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvariantError, SampleTooLargeError
from .model import (
    Detection,
    SequenceInfo,
    Track,
    TrackedBox,
    center,
    path_length,
)

__all__ = [
    "Heatmap",
    "FilterParams",
    "SampleSpec",
    "RADIUS_RULES",
    "rasterize_track",
    "rasterize_all",
    "filter_tracks",
    "sample_size",
    "sample_tracks",
    "hourly_histogram",
    "histogram_csv",
]

# Circle radius from a box; the default is the mean half-extent
# (width + height) / 4, which equals the inscribed radius for square boxes.
RADIUS_RULES = {
    "mean-half-extent": lambda w, h: (w + h) / 4.0,
    "inscribed": lambda w, h: min(w, h) / 2.0,
}


@dataclass(frozen=True, eq=False)
class Heatmap:
    """Per-pixel exposure counts over a frame-sized grid (row-major, [y, x])."""

    width: int
    height: int
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if not np.issubdtype(cells.dtype, np.integer):
            raise InvariantError(f"cells must be integer-valued, got dtype {cells.dtype}")
        if cells.shape != (self.height, self.width):
            raise InvariantError(
                f"cells shape {cells.shape} does not match {self.height} x {self.width}"
            )
        if cells.size and cells.min() < 0:
            raise InvariantError("cells must be nonnegative")
        object.__setattr__(self, "cells", cells)

    @property
    def total_mass(self) -> int:
        return int(self.cells.sum())


@dataclass(frozen=True)
class FilterParams:
    """Joint track-length thresholds; both must hold for a track to survive."""

    min_frames: int = 2000
    min_distance_factor: float = 2.0

    def __post_init__(self):
        if self.min_frames < 1:
            raise InvariantError(f"min_frames must be >= 1, got {self.min_frames}")
        if self.min_distance_factor <= 0:
            raise InvariantError("min_distance_factor must be positive")


@dataclass(frozen=True)
class SampleSpec:
    """Inputs to the finite-population sample-size calculation."""

    population: int
    confidence: float = 0.95
    margin: float = 0.05
    proportion: float = 0.5

    def __post_init__(self):
        if self.population < 1:
            raise InvariantError(f"population must be >= 1, got {self.population}")
        if not (0.0 < self.confidence < 1.0):
            raise InvariantError(f"confidence must be in (0, 1), got {self.confidence}")
        if not (0.0 < self.margin < 1.0):
            raise InvariantError(f"margin must be in (0, 1), got {self.margin}")
        if not (0.0 < self.proportion < 1.0):
            raise InvariantError(f"proportion must be in (0, 1), got {self.proportion}")


def rasterize_track(
    track: Track, info: SequenceInfo, radius_rule: str = "mean-half-extent"
) -> Heatmap:
    """Accumulate one track into a frame-sized exposure heatmap.

    For each point, every integer pixel (x, y) with
    (x - cx)^2 + (y - cy)^2 <= r^2 inside the frame gains +1, where
    (cx, cy) is the box center. Out-of-frame portions clip away.
    """
    radius_of = RADIUS_RULES[radius_rule]
    width, height = info.frame_width, info.frame_height
    counts = np.zeros(height * width, dtype=np.int64)

    cx = np.array([center(p.bbox)[0] for p in track.points])
    cy = np.array([center(p.bbox)[1] for p in track.points])
    radii = np.array([radius_of(p.bbox.width, p.bbox.height) for p in track.points])

    reach = int(np.ceil(radii.max()))
    offsets = np.arange(-reach, reach + 1)
    xs = np.floor(cx).astype(np.int64)[:, None] + offsets[None, :]  # (n, k)
    ys = np.floor(cy).astype(np.int64)[:, None] + offsets[None, :]
    dx = xs - cx[:, None]
    dy = ys - cy[:, None]
    inside = (
        (dx[:, None, :] ** 2 + dy[:, :, None] ** 2) <= (radii**2)[:, None, None]
    )  # (n, ky, kx)
    inside &= ((xs >= 0) & (xs < width))[:, None, :]
    inside &= ((ys >= 0) & (ys < height))[:, :, None]

    flat = np.clip(ys, 0, height - 1)[:, :, None] * width + np.clip(xs, 0, width - 1)[:, None, :]
    counts += np.bincount(flat[inside], minlength=height * width)
    return Heatmap(width, height, counts.reshape(height, width))


def rasterize_all(
    tracks: Sequence[Track], info: SequenceInfo, radius_rule: str = "mean-half-extent"
) -> tuple[dict[int, Heatmap], Heatmap]:
    """Per-track heatmaps plus their cellwise-sum aggregate."""
    per_track: dict[int, Heatmap] = {}
    total = np.zeros((info.frame_height, info.frame_width), dtype=np.int64)
    for track in tracks:
        grid = rasterize_track(track, info, radius_rule)
        per_track[track.track_id] = grid
        total += grid.cells
    return per_track, Heatmap(info.frame_width, info.frame_height, total)


def filter_tracks(
    tracks: Iterable[Track], params: FilterParams, info: SequenceInfo
) -> list[Track]:
    """Keep tracks that are long in frames AND in distance covered.

    The distance threshold is min_distance_factor times the frame width;
    a stationary bright-circle track fails it no matter how long it lasts.
    """
    min_distance = params.min_distance_factor * info.frame_width
    return [
        t
        for t in tracks
        if len(t.points) >= params.min_frames and path_length(t) >= min_distance
    ]


def sample_size(spec: SampleSpec) -> int:
    """Cochran sample size with finite-population correction, rounded up.

    n0 = z^2 p (1 - p) / e^2 with z the two-sided normal quantile for the
    confidence level, then n = ceil(n0 / (1 + (n0 - 1) / N)), capped at N.
    """
    z = NormalDist().inv_cdf((1.0 + spec.confidence) / 2.0)
    n0 = z * z * spec.proportion * (1.0 - spec.proportion) / (spec.margin * spec.margin)
    n = n0 / (1.0 + (n0 - 1.0) / spec.population)
    return min(math.ceil(n), spec.population)


def sample_tracks(tracks: Sequence[Track], n: int, seed: int) -> list[Track]:
    """Uniform sample of n tracks without replacement, in original order."""
    if n > len(tracks):
        raise SampleTooLargeError(f"cannot sample {n} of {len(tracks)} tracks")
    if n < 0:
        raise InvariantError(f"sample size must be nonnegative, got {n}")
    rng = np.random.default_rng(seed)
    indices = sorted(rng.choice(len(tracks), size=n, replace=False).tolist())
    return [tracks[i] for i in indices]


def hourly_histogram(
    items: Sequence[Track] | Sequence[TrackedBox] | Sequence[Detection],
    info: SequenceInfo,
) -> dict[int, int]:
    """Counts per hour of footage: boxes by their frame, tracks by their first frame.

    Hour h covers frames [h * rate * 3600, (h+1) * rate * 3600). All hours
    from 0 through the last occupied one are present in the result.
    """
    frames_per_hour = info.frame_rate * 3600.0
    counts: dict[int, int] = {}
    for item in items:
        frame = item.first_frame if isinstance(item, Track) else item.frame_index
        hour = int(frame // frames_per_hour)
        counts[hour] = counts.get(hour, 0) + 1
    if not counts:
        return {}
    return {h: counts.get(h, 0) for h in range(max(counts) + 1)}


def histogram_csv(counts: Mapping[int, int]) -> str:
    """Render an hour -> count map as "hour,count" CSV."""
    lines = ["hour,count"]
    for hour in sorted(counts):
        lines.append(f"{hour},{counts[hour]}")
    return "".join(line + "\n" for line in lines)
