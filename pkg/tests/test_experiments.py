import numpy as np
import pytest

from headtrack.errors import InvariantError
from headtrack.evaluation import evaluate
from headtrack.experiments import (
    ExperimentMode,
    PerturbParams,
    assign_gt_ids,
    format_experiments_csv,
    perturb_detections,
    run_mode,
    skip_frames,
    sweep,
    sweep_means,
)
from headtrack.model import BoundingBox, SequenceInfo, TrackedBox, boxes_by_frame, group_tracks
from headtrack.simulator import default_layout, simulate_sequence

INFO = SequenceInfo(640, 480, 1000, 25.0)


def gt_frames(n_frames=20, n_boxes=2):
    boxes = [
        TrackedBox(frame, track_id, BoundingBox(50 * track_id + frame, 40 * track_id, 12, 12))
        for frame in range(1, n_frames + 1)
        for track_id in range(1, n_boxes + 1)
    ]
    return boxes_by_frame(group_tracks(boxes))


class TestSkipFrames:
    def test_p_zero_is_identity(self):
        frames = gt_frames()
        assert skip_frames(frames, 0.0, seed=1) == frames

    def test_p_one_drops_everything(self):
        assert skip_frames(gt_frames(), 1.0, seed=1) == {}

    def test_kept_fraction_is_binomial(self):
        frames = {f: [f] for f in range(10_000)}
        kept = skip_frames(frames, 0.5, seed=123)
        sigma = (10_000 * 0.25) ** 0.5
        assert abs(len(kept) - 5000) <= 3 * sigma

    def test_deterministic_and_indices_preserved(self):
        frames = gt_frames(50)
        a = skip_frames(frames, 0.4, seed=9)
        b = skip_frames(frames, 0.4, seed=9)
        assert a == b
        assert set(a) <= set(frames)

    def test_bad_probability(self):
        with pytest.raises(InvariantError):
            skip_frames(gt_frames(), 1.5, seed=0)


class TestPerturb:
    def test_zero_params_pass_through_exactly(self):
        frames = gt_frames()
        out = perturb_detections(frames, PerturbParams(0, 0, 0, 0, seed=3), INFO)
        for frame, boxes in frames.items():
            got = out[frame]
            assert [d.bbox for d in got] == [b.bbox for b in boxes]

    def test_miss_prob_one_leaves_only_spurious(self):
        frames = gt_frames()
        out = perturb_detections(frames, PerturbParams(0, 0, 1.0, 2.0, seed=3), INFO)
        originals = {(b.bbox.x_left, b.bbox.y_top) for boxes in frames.values() for b in boxes}
        for boxes in out.values():
            for d in boxes:
                assert (d.bbox.x_left, d.bbox.y_top) not in originals

    def test_drop_fraction_within_three_sigma(self):
        frames = {f: [TrackedBox(f, 1, BoundingBox(10, 10, 5, 5))] for f in range(1, 1001)}
        out = perturb_detections(frames, PerturbParams(0, 0, 0.2, 0, seed=5), INFO)
        survivors = sum(len(v) for v in out.values())
        dropped = 1000 - survivors
        sigma = (1000 * 0.2 * 0.8) ** 0.5
        assert abs(dropped - 200) <= 3 * sigma

    def test_deterministic(self):
        frames = gt_frames()
        params = PerturbParams(seed=11)
        assert perturb_detections(frames, params, INFO) == perturb_detections(frames, params, INFO)


class TestAssignGtIds:
    def test_exact_boxes_inherit_ids(self):
        frames = gt_frames()
        gt = group_tracks(b for boxes in frames.values() for b in boxes)
        detections = perturb_detections(frames, PerturbParams(0, 0, 0, 0, seed=1), INFO)
        hyp = assign_gt_ids(detections, gt)
        assert {t.track_id for t in hyp} == {t.track_id for t in gt}
        assert evaluate(gt, hyp).mota == 1.0

    def test_far_away_box_becomes_singleton(self):
        from headtrack.model import Detection

        gt = group_tracks([TrackedBox(1, 1, BoundingBox(0, 0, 10, 10))])
        detections = {
            1: [
                Detection(1, BoundingBox(0, 0, 10, 10), 1.0),
                Detection(1, BoundingBox(400, 400, 10, 10), 1.0),
            ]
        }
        hyp = assign_gt_ids(detections, gt)
        assert len(hyp) == 2
        singleton = [t for t in hyp if t.track_id != 1]
        assert len(singleton) == 1 and len(singleton[0].points) == 1

    def test_jittered_boxes_within_gate_keep_ids(self):
        gt = group_tracks(
            [TrackedBox(f, 1, BoundingBox(100, 100, 20, 20)) for f in range(1, 6)]
        )
        from headtrack.model import Detection

        detections = {
            f: [Detection(f, BoundingBox(102, 101, 20, 20), 1.0)] for f in range(1, 6)
        }
        hyp = assign_gt_ids(detections, gt)
        assert [t.track_id for t in hyp] == [1]


class TestRunMode:
    def test_detection_mode_with_zero_noise_is_perfect(self):
        layout = default_layout()
        gt = simulate_sequence(2, layout, 60, seed=3, separated=True)
        info = layout.sequence_info(60)
        report = run_mode(
            ExperimentMode.DETECTION_ERRORS, gt, 0.0, 1, info,
            perturb_params=PerturbParams(0, 0, 0, 0, seed=0),
        )
        assert report.mota == 1.0

    def test_tracking_mode_on_separated_agents(self):
        layout = default_layout()
        gt = simulate_sequence(2, layout, 100, seed=3, separated=True)
        report = run_mode(
            ExperimentMode.TRACKING_ERRORS, gt, 0.0, 1, layout.sequence_info(100)
        )
        assert report.mota >= 0.9

    @pytest.mark.parametrize("p", [0.0, 0.3])
    def test_compound_with_zero_perturbation_equals_tracking(self, p):
        layout = default_layout()
        gt = simulate_sequence(3, layout, 80, seed=5)
        info = layout.sequence_info(80)
        zero = PerturbParams(0, 0, 0, 0, seed=0)
        tracking = run_mode(ExperimentMode.TRACKING_ERRORS, gt, p, 7, info)
        compound = run_mode(ExperimentMode.COMPOUND, gt, p, 7, info, perturb_params=zero)
        assert compound.counts == tracking.counts


class TestSweep:
    def test_single_point_single_seed_matches_run_mode(self):
        layout = default_layout()
        gt = simulate_sequence(2, layout, 60, seed=2, separated=True)
        info = layout.sequence_info(60)
        rows = sweep(ExperimentMode.TRACKING_ERRORS, gt, [0.2], 1, info, base_seed=5)
        direct = run_mode(ExperimentMode.TRACKING_ERRORS, gt, 0.2, 5, info)
        assert len(rows) == 1
        assert rows[0].report == direct

    def test_row_counts_and_csv_layout(self):
        layout = default_layout()
        gt = simulate_sequence(2, layout, 40, seed=2, separated=True)
        info = layout.sequence_info(40)
        rows = sweep(ExperimentMode.TRACKING_ERRORS, gt, [0.0, 0.5], 3, info)
        assert len(rows) == 6
        text = format_experiments_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == "mode,p,seed,fp,fn,idsw,gt,mota"
        assert len(lines) == 1 + 6 + 2  # header + per-seed rows + one mean row per p
        assert lines[4].split(",")[2] == "mean"

    def test_parallel_equals_serial(self):
        layout = default_layout()
        gt = simulate_sequence(2, layout, 40, seed=2, separated=True)
        info = layout.sequence_info(40)
        serial = sweep(ExperimentMode.TRACKING_ERRORS, gt, [0.0, 0.4], 2, info, jobs=1)
        parallel = sweep(ExperimentMode.TRACKING_ERRORS, gt, [0.0, 0.4], 2, info, jobs=2)
        assert serial == parallel

    def test_means(self):
        layout = default_layout()
        gt = simulate_sequence(2, layout, 40, seed=2, separated=True)
        info = layout.sequence_info(40)
        rows = sweep(ExperimentMode.TRACKING_ERRORS, gt, [0.0], 4, info)
        means = sweep_means(rows)
        assert means[0.0]["mota"] == pytest.approx(
            sum(r.report.mota for r in rows) / 4
        )

    def test_compound_never_beats_tracking_on_average(self):
        # with nonzero perturbation the compound run carries the tracking
        # errors plus detector noise, so its seed-mean MOTA cannot win
        layout = default_layout()
        gt = simulate_sequence(3, layout, 120, seed=21)
        info = layout.sequence_info(120)
        for p in (0.0, 0.4):
            tracking = sweep_means(
                sweep(ExperimentMode.TRACKING_ERRORS, gt, [p], 4, info, base_seed=2)
            )[p]["mota"]
            compound = sweep_means(
                sweep(ExperimentMode.COMPOUND, gt, [p], 4, info, base_seed=2)
            )[p]["mota"]
            assert compound <= tracking
