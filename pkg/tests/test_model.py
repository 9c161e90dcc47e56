import math

import numpy as np
import pytest

from headtrack.errors import InvariantError
from headtrack.model import (
    BoundingBox,
    Detection,
    Track,
    TrackedBox,
    center,
    group_tracks,
    iou,
    iou_matrix,
    path_length,
)

from conftest import random_quantized_box


def box(*args):
    return BoundingBox(*args)


class TestBoundingBox:
    def test_rejects_nonpositive_size(self):
        with pytest.raises(InvariantError):
            box(0, 0, 0, 10)
        with pytest.raises(InvariantError):
            box(0, 0, 10, -1)

    def test_rejects_non_finite(self):
        with pytest.raises(InvariantError):
            box(float("nan"), 0, 10, 10)
        with pytest.raises(InvariantError):
            box(0, 0, float("inf"), 10)

    def test_negative_corner_is_fine(self):
        b = box(-5.5, -2.0, 10, 10)
        assert b.x_right == 4.5


class TestIou:
    def test_identity(self):
        b = box(0, 0, 10, 10)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(box(0, 0, 10, 10), box(20, 20, 5, 5)) == 0.0

    def test_half_offset(self):
        # intersection 50, union 150
        assert iou(box(0, 0, 10, 10), box(5, 0, 10, 10)) == pytest.approx(1 / 3, abs=1e-12)

    def test_symmetry_and_identity_property(self, rng):
        for _ in range(200):
            a = random_quantized_box(rng)
            b = random_quantized_box(rng)
            assert iou(a, b) == iou(b, a)
            assert iou(a, a) == 1.0
            assert 0.0 <= iou(a, b) <= 1.0

    def test_matrix_matches_scalar(self, rng):
        boxes_a = [random_quantized_box(rng) for _ in range(7)]
        boxes_b = [random_quantized_box(rng) for _ in range(5)]
        matrix = iou_matrix(boxes_a, boxes_b)
        for i, a in enumerate(boxes_a):
            for j, b in enumerate(boxes_b):
                assert matrix[i, j] == pytest.approx(iou(a, b), abs=1e-12)

    def test_matrix_empty(self):
        assert iou_matrix([], [box(0, 0, 1, 1)]).shape == (0, 1)


class TestCenter:
    def test_examples(self):
        assert center(box(0, 0, 10, 10)) == (5, 5)
        assert center(box(45, 45, 10, 10)) == (50, 50)
        assert center(box(2, 3, 5, 7)) == (4.5, 6.5)


def _track(centers, track_id=1, size=10.0):
    points = tuple(
        TrackedBox(i + 1, track_id, box(cx - size / 2, cy - size / 2, size, size))
        for i, (cx, cy) in enumerate(centers)
    )
    return Track(track_id, points)


class TestPathLength:
    def test_single_point(self):
        assert path_length(_track([(0, 0)])) == 0.0

    def test_three_four_five(self):
        assert path_length(_track([(0, 0), (3, 4)])) == pytest.approx(5.0)

    def test_zero_displacement_adds_nothing(self):
        assert path_length(_track([(0, 0), (3, 4), (3, 4)])) == pytest.approx(5.0)

    def test_translation_invariance(self, rng):
        centers = [(float(x), float(y)) for x, y in rng.uniform(20, 400, size=(10, 2))]
        base = path_length(_track(centers))
        shifted = [(x + 123.5, y - 42.25) for x, y in centers]
        assert path_length(_track(shifted)) == pytest.approx(base, rel=1e-12)


class TestTrack:
    def test_rejects_empty(self):
        with pytest.raises(InvariantError):
            Track(1, ())

    def test_rejects_non_increasing_frames(self):
        b = box(0, 0, 10, 10)
        with pytest.raises(InvariantError):
            Track(1, (TrackedBox(2, 1, b), TrackedBox(2, 1, b)))
        with pytest.raises(InvariantError):
            Track(1, (TrackedBox(3, 1, b), TrackedBox(1, 1, b)))

    def test_rejects_foreign_points(self):
        b = box(0, 0, 10, 10)
        with pytest.raises(InvariantError):
            Track(1, (TrackedBox(1, 2, b),))

    def test_group_tracks_sorts(self):
        b = box(0, 0, 10, 10)
        boxes = [TrackedBox(5, 2, b), TrackedBox(1, 1, b), TrackedBox(2, 2, b)]
        tracks = group_tracks(boxes)
        assert [t.track_id for t in tracks] == [1, 2]
        assert [p.frame_index for p in tracks[1].points] == [2, 5]


class TestDetection:
    def test_confidence_bounds(self):
        b = box(0, 0, 10, 10)
        Detection(0, b, 0.0)
        Detection(0, b, 1.0)
        with pytest.raises(InvariantError):
            Detection(0, b, 1.5)
        with pytest.raises(InvariantError):
            Detection(-1, b, 0.5)

    def test_tracked_box_id_positive(self):
        with pytest.raises(InvariantError):
            TrackedBox(0, 0, box(0, 0, 10, 10))
