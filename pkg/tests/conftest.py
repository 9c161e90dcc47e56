import numpy as np
import pytest

from headtrack.model import BoundingBox, Detection, Track, TrackedBox


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_quantized_box(rng) -> BoundingBox:
    """A box whose fields survive 6-significant-digit printing exactly."""
    left = int(rng.integers(0, 90000)) / 100.0
    top = int(rng.integers(0, 90000)) / 100.0
    width = int(rng.integers(1, 80000)) / 100.0
    height = int(rng.integers(1, 80000)) / 100.0
    return BoundingBox(left, top, width, height)


def random_detections(rng, n) -> list[Detection]:
    return [
        Detection(
            int(rng.integers(1, 500)),
            random_quantized_box(rng),
            int(rng.integers(0, 101)) / 100.0,
        )
        for _ in range(n)
    ]


def random_tracks(rng, n_tracks, max_points=8) -> list[Track]:
    tracks = []
    for track_id in range(1, n_tracks + 1):
        n_points = int(rng.integers(1, max_points + 1))
        frames = sorted(rng.choice(np.arange(1, 200), size=n_points, replace=False).tolist())
        points = tuple(
            TrackedBox(frame, track_id, random_quantized_box(rng)) for frame in frames
        )
        tracks.append(Track(track_id, points))
    return tracks
