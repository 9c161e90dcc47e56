"""Geometric and track domain types with their elementary measures.

Boxes are stored as (left, top, width, height) in continuous pixel
coordinates and treated as half-open real regions; degenerate boxes are
rejected at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np

from .errors import InvariantError

__all__ = [
    "ClassLabel",
    "BoundingBox",
    "Detection",
    "TrackedBox",
    "Track",
    "SequenceInfo",
    "iou",
    "iou_matrix",
    "center",
    "path_length",
    "group_tracks",
    "boxes_by_frame",
    "detections_by_frame",
]


class ClassLabel(IntEnum):
    """Track categories: 0 = customer, 1 = staff, 2 = erroneous track."""

    CUSTOMER = 0
    STAFF = 1
    ERROR = 2


def _check_int(value, name: str, minimum: int) -> int:
    if isinstance(value, bool) or (not isinstance(value, (int, np.integer)) and float(value) != int(value)):
        raise InvariantError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise InvariantError(f"{name} must be >= {minimum}, got {value}")
    return value


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel box given by its left/top corner and size."""

    x_left: float
    y_top: float
    width: float
    height: float

    def __post_init__(self):
        for name in ("x_left", "y_top", "width", "height"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvariantError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.width <= 0 or self.height <= 0:
            raise InvariantError(
                f"box size must be positive, got {self.width} x {self.height}"
            )

    @property
    def x_right(self) -> float:
        return self.x_left + self.width

    @property
    def y_bottom(self) -> float:
        return self.y_top + self.height

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class Detection:
    """A confidence-scored box on one frame, not yet bound to an identity."""

    frame_index: int
    bbox: BoundingBox
    confidence: float

    def __post_init__(self):
        object.__setattr__(self, "frame_index", _check_int(self.frame_index, "frame_index", 0))
        conf = float(self.confidence)
        if not (0.0 <= conf <= 1.0):
            raise InvariantError(f"confidence must be in [0, 1], got {conf}")
        object.__setattr__(self, "confidence", conf)


@dataclass(frozen=True)
class TrackedBox:
    """A box on one frame carrying the identity it was assigned to."""

    frame_index: int
    track_id: int
    bbox: BoundingBox

    def __post_init__(self):
        object.__setattr__(self, "frame_index", _check_int(self.frame_index, "frame_index", 0))
        object.__setattr__(self, "track_id", _check_int(self.track_id, "track_id", 1))


@dataclass(frozen=True)
class Track:
    """One identity's boxes ordered by strictly increasing frame index."""

    track_id: int
    points: tuple[TrackedBox, ...]

    def __post_init__(self):
        object.__setattr__(self, "track_id", _check_int(self.track_id, "track_id", 1))
        points = tuple(self.points)
        if not points:
            raise InvariantError(f"track {self.track_id} has no points")
        for point in points:
            if point.track_id != self.track_id:
                raise InvariantError(
                    f"track {self.track_id} contains a box owned by id {point.track_id}"
                )
        for prev, cur in zip(points, points[1:]):
            if cur.frame_index <= prev.frame_index:
                raise InvariantError(
                    f"track {self.track_id}: frame indices must be strictly increasing "
                    f"({prev.frame_index} then {cur.frame_index})"
                )
        object.__setattr__(self, "points", points)

    @property
    def first_frame(self) -> int:
        return self.points[0].frame_index

    @property
    def last_frame(self) -> int:
        return self.points[-1].frame_index

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SequenceInfo:
    """Static facts about a video sequence; the frame size also fixes heatmap size."""

    frame_width: int
    frame_height: int
    frame_count: int
    frame_rate: float

    def __post_init__(self):
        object.__setattr__(self, "frame_width", _check_int(self.frame_width, "frame_width", 1))
        object.__setattr__(self, "frame_height", _check_int(self.frame_height, "frame_height", 1))
        object.__setattr__(self, "frame_count", _check_int(self.frame_count, "frame_count", 1))
        rate = float(self.frame_rate)
        if not (math.isfinite(rate) and rate > 0):
            raise InvariantError(f"frame_rate must be positive, got {rate!r}")
        object.__setattr__(self, "frame_rate", rate)


def center(box: BoundingBox) -> tuple[float, float]:
    """Center of a box as (x, y)."""
    return (box.x_left + box.width / 2.0, box.y_top + box.height / 2.0)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint, exactly 1 for a == b."""
    ix = min(a.x_right, b.x_right) - max(a.x_left, b.x_left)
    if ix <= 0:
        return 0.0
    iy = min(a.y_bottom, b.y_bottom) - max(a.y_top, b.y_top)
    if iy <= 0:
        return 0.0
    inter = ix * iy
    # Areas from the same corner arithmetic as the intersection, so that
    # identical boxes give intersection == union bit-exactly.
    area_a = (a.x_right - a.x_left) * (a.y_bottom - a.y_top)
    area_b = (b.x_right - b.x_left) * (b.y_bottom - b.y_top)
    return inter / (area_a + area_b - inter)


def iou_matrix(a: Sequence[BoundingBox], b: Sequence[BoundingBox]) -> np.ndarray:
    """Pairwise IOU of two box lists as an (len(a), len(b)) array."""
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    al = np.array([box.x_left for box in a])
    at = np.array([box.y_top for box in a])
    ar = np.array([box.x_right for box in a])
    ab = np.array([box.y_bottom for box in a])
    bl = np.array([box.x_left for box in b])
    bt = np.array([box.y_top for box in b])
    br = np.array([box.x_right for box in b])
    bb = np.array([box.y_bottom for box in b])
    ix = np.minimum(ar[:, None], br[None, :]) - np.maximum(al[:, None], bl[None, :])
    iy = np.minimum(ab[:, None], bb[None, :]) - np.maximum(at[:, None], bt[None, :])
    inter = np.clip(ix, 0.0, None) * np.clip(iy, 0.0, None)
    area_a = ((ar - al) * (ab - at))[:, None]
    area_b = ((br - bl) * (bb - bt))[None, :]
    return inter / (area_a + area_b - inter)


def path_length(track: Track) -> float:
    """Total straight-line distance between centers of consecutive points.

    Frame gaps contribute the direct center-to-center distance; there is
    no interpolation across skipped frames.
    """
    total = 0.0
    prev = None
    for point in track.points:
        cur = center(point.bbox)
        if prev is not None:
            total += math.hypot(cur[0] - prev[0], cur[1] - prev[1])
        prev = cur
    return total


def group_tracks(boxes: Iterable[TrackedBox]) -> list[Track]:
    """Group identity-bearing boxes into Tracks, ordered by track id.

    Boxes are sorted by frame within each track; duplicate frames fail the
    Track invariant.
    """
    by_id: dict[int, list[TrackedBox]] = {}
    for box in boxes:
        by_id.setdefault(box.track_id, []).append(box)
    tracks = []
    for track_id in sorted(by_id):
        points = sorted(by_id[track_id], key=lambda p: p.frame_index)
        tracks.append(Track(track_id, tuple(points)))
    return tracks


def boxes_by_frame(tracks: Iterable[Track]) -> dict[int, list[TrackedBox]]:
    """Regroup tracks into per-frame box lists with ascending frame keys."""
    frames: dict[int, list[TrackedBox]] = {}
    for track in tracks:
        for point in track.points:
            frames.setdefault(point.frame_index, []).append(point)
    return {f: frames[f] for f in sorted(frames)}


def detections_by_frame(detections: Iterable[Detection]) -> dict[int, list[Detection]]:
    """Group detections by frame with ascending frame keys, keeping input order within a frame."""
    frames: dict[int, list[Detection]] = {}
    for det in detections:
        frames.setdefault(det.frame_index, []).append(det)
    return {f: frames[f] for f in sorted(frames)}
