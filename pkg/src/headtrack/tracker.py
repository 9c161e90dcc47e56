"""SORT-style online multi-object tracker.

Each identity is backed by a constant-velocity Kalman filter over the
7-vector [u, v, s, r, du, dv, ds]: box center (u, v), area s, and aspect
ratio r = width/height (modeled constant, no velocity term). Detections
associate to predicted boxes by Hungarian assignment on 1 - IOU, and
track lifecycle follows hits / time-since-update counters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .assignment import solve_assignment
from .errors import InvariantError, NumericError, OutOfOrderFrameError
from .model import BoundingBox, Detection, Track, TrackedBox, group_tracks, iou_matrix

__all__ = [
    "TrackerParams",
    "KalmanTrackState",
    "ActiveTrack",
    "bbox_to_measurement",
    "measurement_to_bbox",
    "initial_state",
    "predict",
    "update",
    "associate",
    "SortTracker",
    "run",
    "solve_assignment",
]

# Constant-velocity transition: u += du, v += dv, s += ds, r unchanged.
_F = np.eye(7)
_F[0, 4] = _F[1, 5] = _F[2, 6] = 1.0
# Measure (u, v, s, r) directly.
_H = np.zeros((4, 7))
_H[0, 0] = _H[1, 1] = _H[2, 2] = _H[3, 3] = 1.0

_MEASUREMENT_DIAG = np.array([1.0, 1.0, 10.0, 0.01])
_PROCESS_DIAG = np.array([1.0, 1.0, 1.0, 1e-4, 0.01, 0.01, 1e-4])
# New tracks start with moderate position/size uncertainty and a very
# uncertain velocity, so the first few updates dominate the estimate.
_INITIAL_COV_DIAG = np.array([1.0, 1.0, 10.0, 0.01, 1e4, 1e4, 1e-2])

_AREA_FLOOR = 1e-4
_RATIO_FLOOR = 1e-4


@dataclass(frozen=True)
class TrackerParams:
    """Tracker knobs; the defaults are conventional SORT-family values."""

    iou_gate: float = 0.3
    max_age: int = 3
    min_hits: int = 3
    process_noise_scale: float = 1.0
    measurement_noise_scale: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.iou_gate <= 1.0):
            raise InvariantError(f"iou_gate must be in (0, 1], got {self.iou_gate}")
        if self.max_age < 1 or self.min_hits < 1:
            raise InvariantError("max_age and min_hits must be >= 1")
        if self.process_noise_scale <= 0 or self.measurement_noise_scale <= 0:
            raise InvariantError("noise scales must be positive")


@dataclass(frozen=True)
class KalmanTrackState:
    """Mean and covariance of one track's 7-dimensional motion state."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(7)
        cov = np.asarray(self.covariance, dtype=float).reshape(7, 7)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise InvariantError("state contains non-finite values")
        if mean[2] <= 0 or mean[3] <= 0:
            raise InvariantError(f"area/aspect must stay positive, got s={mean[2]}, r={mean[3]}")
        if np.abs(cov - cov.T).max() > 1e-9:
            raise InvariantError("covariance is not symmetric within 1e-9")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise InvariantError("covariance is not positive-definite") from None


def bbox_to_measurement(box: BoundingBox) -> np.ndarray:
    """Box -> (center x, center y, area, aspect ratio)."""
    u = box.x_left + box.width / 2.0
    v = box.y_top + box.height / 2.0
    return np.array([u, v, box.width * box.height, box.width / box.height])


def measurement_to_bbox(z: Sequence[float]) -> BoundingBox:
    """Inverse of bbox_to_measurement; rejects nonpositive area or aspect."""
    u, v, s, r = (float(x) for x in z)
    if s <= 0 or r <= 0:
        raise InvariantError(f"cannot invert measurement with s={s}, r={r}")
    width = float(np.sqrt(s * r))
    height = s / width
    return BoundingBox(u - width / 2.0, v - height / 2.0, width, height)


def initial_state(box: BoundingBox, params: TrackerParams = TrackerParams()) -> KalmanTrackState:
    """State for a freshly spawned track: the measurement with zero velocities."""
    mean = np.zeros(7)
    mean[:4] = bbox_to_measurement(box)
    return KalmanTrackState(mean, np.diag(_INITIAL_COV_DIAG.copy()))


def predict(state: KalmanTrackState, params: TrackerParams = TrackerParams()) -> KalmanTrackState:
    """Advance one frame under the constant-velocity model with process noise."""
    mean = _F @ state.mean
    if mean[2] <= _AREA_FLOOR:
        mean[2] = _AREA_FLOOR
        mean[6] = 0.0
    q = np.diag(_PROCESS_DIAG * params.process_noise_scale)
    cov = _F @ state.covariance @ _F.T + q
    cov = (cov + cov.T) / 2.0
    return KalmanTrackState(mean, cov)


def update(
    state: KalmanTrackState,
    measurement: Sequence[float],
    params: TrackerParams = TrackerParams(),
) -> KalmanTrackState:
    """Fold one (u, v, s, r) measurement into the state (Joseph-form correction)."""
    z = np.asarray(measurement, dtype=float).reshape(4)
    if not np.all(np.isfinite(z)):
        raise InvariantError("measurement contains non-finite values")
    r_noise = np.diag(_MEASUREMENT_DIAG * params.measurement_noise_scale)
    innovation = z - _H @ state.mean
    s_matrix = _H @ state.covariance @ _H.T + r_noise
    try:
        gain = np.linalg.solve(s_matrix, (state.covariance @ _H.T).T).T
    except np.linalg.LinAlgError:
        raise NumericError("innovation covariance solve failed") from None
    mean = state.mean + gain @ innovation
    identity_kh = np.eye(7) - gain @ _H
    cov = identity_kh @ state.covariance @ identity_kh.T + gain @ r_noise @ gain.T
    cov = (cov + cov.T) / 2.0
    if mean[2] <= _AREA_FLOOR:
        mean[2] = _AREA_FLOOR
        mean[6] = 0.0
    if mean[3] <= _RATIO_FLOOR:
        mean[3] = _RATIO_FLOOR
    return KalmanTrackState(mean, cov)


def associate(
    predicted: Sequence[BoundingBox],
    detections: Sequence[BoundingBox],
    iou_gate: float,
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Hungarian association of predicted track boxes to detection boxes.

    Cost is 1 - IOU; any assigned pair below the gate dissolves back into
    the unmatched sets. Returns (matches, unmatched_detections,
    unmatched_tracks) as index lists.
    """
    if not predicted or not detections:
        return [], list(range(len(detections))), list(range(len(predicted)))
    ious = iou_matrix(predicted, detections)
    pairs = solve_assignment(1.0 - ious)
    matches = [(ti, di) for ti, di in pairs if ious[ti, di] >= iou_gate]
    matched_tracks = {ti for ti, _ in matches}
    matched_dets = {di for _, di in matches}
    unmatched_dets = [di for di in range(len(detections)) if di not in matched_dets]
    unmatched_tracks = [ti for ti in range(len(predicted)) if ti not in matched_tracks]
    return matches, unmatched_dets, unmatched_tracks


@dataclass
class ActiveTrack:
    """Bookkeeping for one live tracker identity."""

    track_id: int
    state: KalmanTrackState
    hits: int = 1
    age: int = 0
    time_since_update: int = 0


class SortTracker:
    """Online tracker; feed frames in increasing order via step().

    A skipped frame is not replayed: each step() advances the prediction
    exactly once regardless of the frame-index gap.
    """

    def __init__(self, params: TrackerParams = TrackerParams()):
        self.params = params
        self._tracks: list[ActiveTrack] = []
        self._next_id = 1
        self._last_frame: int | None = None
        self._steps = 0

    def step(self, frame_index: int, detections: Sequence[Detection]) -> list[TrackedBox]:
        """Process one frame of detections; returns the boxes emitted for it."""
        if self._last_frame is not None and frame_index <= self._last_frame:
            raise OutOfOrderFrameError(
                f"frame {frame_index} not after last stepped frame {self._last_frame}"
            )
        self._last_frame = frame_index
        self._steps += 1

        for track in self._tracks:
            track.state = predict(track.state, self.params)
            track.age += 1
            track.time_since_update += 1

        predicted = [measurement_to_bbox(t.state.mean[:4]) for t in self._tracks]
        det_boxes = [d.bbox for d in detections]
        matches, unmatched_dets, _ = associate(predicted, det_boxes, self.params.iou_gate)

        for track_index, det_index in matches:
            track = self._tracks[track_index]
            track.state = update(
                track.state, bbox_to_measurement(det_boxes[det_index]), self.params
            )
            track.hits += 1
            track.time_since_update = 0

        for det_index in unmatched_dets:
            self._tracks.append(
                ActiveTrack(self._next_id, initial_state(det_boxes[det_index], self.params))
            )
            self._next_id += 1

        self._tracks = [t for t in self._tracks if t.time_since_update <= self.params.max_age]

        emitted = []
        for track in self._tracks:
            if track.time_since_update == 0 and (
                track.hits >= self.params.min_hits or self._steps <= self.params.min_hits
            ):
                emitted.append(
                    TrackedBox(frame_index, track.track_id, measurement_to_bbox(track.state.mean[:4]))
                )
        return emitted


def run(detections: Iterable[Detection], params: TrackerParams = TrackerParams()) -> list[Track]:
    """Track a whole sequence of detections and return the finished tracks.

    Deterministic: identical detections and params yield identical tracks.
    Frames absent from the input are simply never stepped.
    """
    frames: dict[int, list[Detection]] = {}
    for det in detections:
        frames.setdefault(det.frame_index, []).append(det)
    tracker = SortTracker(params)
    boxes: list[TrackedBox] = []
    for frame_index in sorted(frames):
        boxes.extend(tracker.step(frame_index, frames[frame_index]))
    return group_tracks(boxes)
