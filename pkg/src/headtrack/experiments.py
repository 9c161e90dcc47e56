"""Skip-frame sweeps and detection/tracking error decomposition.

Three evaluation combinations are supported, all scored against ground
truth restricted to the frames that survive skipping:

- detection errors:  perturbed boxes carrying ground-truth identities
  (inherited per frame by gated max-IOU matching);
- tracking errors:   exact ground-truth boxes, identities re-derived by
  the online tracker;
- compound:          perturbed boxes through the tracker.

With zero perturbation the compound mode reduces to the tracking mode
exactly, box for box.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence, TypeVar

import numpy as np

from .assignment import match_boxes_max_iou
from .errors import InvariantError
from .evaluation import MotaReport, evaluate
from .io import fmt_real
from .model import (
    BoundingBox,
    Detection,
    SequenceInfo,
    Track,
    TrackedBox,
    boxes_by_frame,
    group_tracks,
)
from .seeding import derive_seed
from .tracker import TrackerParams, run

__all__ = [
    "ExperimentMode",
    "PerturbParams",
    "SweepRow",
    "skip_frames",
    "perturb_detections",
    "assign_gt_ids",
    "run_mode",
    "sweep",
    "sweep_means",
    "format_experiments_csv",
    "EXPERIMENTS_CSV_HEADER",
]

EXPERIMENTS_CSV_HEADER = "mode,p,seed,fp,fn,idsw,gt,mota"

_T = TypeVar("_T")


class ExperimentMode(Enum):
    """Which component supplies boxes and which supplies identities."""

    DETECTION_ERRORS = "detection_errors"
    TRACKING_ERRORS = "tracking_errors"
    COMPOUND = "compound"


@dataclass(frozen=True)
class PerturbParams:
    """Synthetic detector-error model standing in for a real detector."""

    center_jitter_std: float = 2.0
    size_jitter_std: float = 0.05
    miss_prob: float = 0.1
    fp_per_frame: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.miss_prob <= 1.0):
            raise InvariantError(f"miss_prob must be in [0, 1], got {self.miss_prob}")
        if self.center_jitter_std < 0 or self.size_jitter_std < 0:
            raise InvariantError("jitter stds must be nonnegative")
        if self.fp_per_frame < 0:
            raise InvariantError("fp_per_frame must be nonnegative")


def skip_frames(
    frames: Mapping[int, Sequence[_T]], p: float, seed: int
) -> dict[int, list[_T]]:
    """Drop each frame independently with probability p (seeded, reproducible).

    Surviving frames keep their original indices.
    """
    if not (0.0 <= p <= 1.0):
        raise InvariantError(f"skip probability must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    kept: dict[int, list[_T]] = {}
    for frame in sorted(frames):
        if rng.random() >= p:
            kept[frame] = list(frames[frame])
    return kept


def perturb_detections(
    frames: Mapping[int, Sequence[TrackedBox]],
    params: PerturbParams,
    info: SequenceInfo,
) -> dict[int, list[Detection]]:
    """Turn ground-truth boxes into detector-like detections (ids stripped).

    Each box is dropped with miss_prob; survivors get a Gaussian center
    shift and log-normal width/height factors. Poisson(fp_per_frame)
    spurious boxes per frame land uniformly in-frame with sizes resampled
    from the ground-truth size pool. All draws come from one generator
    seeded by params.seed, so output is a pure function of the inputs.
    With all-zero noise parameters the boxes pass through bit-exactly.
    """
    rng = np.random.default_rng(params.seed)
    size_pool = [
        (box.bbox.width, box.bbox.height)
        for frame in sorted(frames)
        for box in frames[frame]
    ]
    out: dict[int, list[Detection]] = {}
    for frame in sorted(frames):
        detections: list[Detection] = []
        for box in frames[frame]:
            if rng.random() < params.miss_prob:
                continue
            b = box.bbox
            dcx = rng.normal(0.0, params.center_jitter_std)
            dcy = rng.normal(0.0, params.center_jitter_std)
            new_w = b.width * np.exp(rng.normal(0.0, params.size_jitter_std))
            new_h = b.height * np.exp(rng.normal(0.0, params.size_jitter_std))
            # Anchored on left/top so zero draws reproduce the input exactly.
            detections.append(
                Detection(
                    frame,
                    BoundingBox(
                        b.x_left + dcx + (b.width - new_w) / 2.0,
                        b.y_top + dcy + (b.height - new_h) / 2.0,
                        new_w,
                        new_h,
                    ),
                    1.0,
                )
            )
        for _ in range(int(rng.poisson(params.fp_per_frame)) if size_pool else 0):
            w, h = size_pool[int(rng.integers(len(size_pool)))]
            cx = rng.uniform(0.0, info.frame_width)
            cy = rng.uniform(0.0, info.frame_height)
            detections.append(
                Detection(frame, BoundingBox(cx - w / 2.0, cy - h / 2.0, w, h), 1.0)
            )
        out[frame] = detections
    return out


def assign_gt_ids(
    detections: Mapping[int, Sequence[Detection]],
    gt: Sequence[Track],
    iou_gate: float = 0.5,
) -> list[Track]:
    """Give detector boxes ground-truth identities by per-frame IOU matching.

    Matched boxes inherit the overlapping ground-truth id; every unmatched
    box becomes its own fresh singleton track, so detector false positives
    stay visible to the evaluator.
    """
    gt_frames = boxes_by_frame(gt)
    next_id = max((t.track_id for t in gt), default=0) + 1
    out: list[TrackedBox] = []
    for frame in sorted(detections):
        dets = list(detections[frame])
        gt_boxes = gt_frames.get(frame, [])
        pairs = match_boxes_max_iou(
            [d.bbox for d in dets], [b.bbox for b in gt_boxes], iou_gate
        )
        inherited = {di: gt_boxes[gj].track_id for di, gj in pairs}
        for di, det in enumerate(dets):
            track_id = inherited.get(di)
            if track_id is None:
                track_id = next_id
                next_id += 1
            out.append(TrackedBox(frame, track_id, det.bbox))
    return group_tracks(out)


def _strip_ids(frames: Mapping[int, Sequence[TrackedBox]]) -> list[Detection]:
    return [
        Detection(frame, box.bbox, 1.0)
        for frame in sorted(frames)
        for box in frames[frame]
    ]


def _flatten(frames: Mapping[int, Sequence[Detection]]) -> list[Detection]:
    return [det for frame in sorted(frames) for det in frames[frame]]


def run_mode(
    mode: ExperimentMode,
    gt: Sequence[Track],
    p: float,
    seed: int,
    info: SequenceInfo,
    tracker_params: TrackerParams = TrackerParams(),
    perturb_params: PerturbParams = PerturbParams(),
    match_iou: float = 0.5,
    id_gate: float = 0.5,
) -> MotaReport:
    """Run one evaluation combination at skip probability p with one seed.

    Frames are skipped first and the evaluation ground truth is restricted
    to the survivors. The perturbation stream is decorrelated from the
    skip stream by seed mixing.
    """
    surviving = skip_frames(boxes_by_frame(gt), p, seed)
    gt_surviving = group_tracks(box for boxes in surviving.values() for box in boxes)

    if mode is ExperimentMode.TRACKING_ERRORS:
        hyp = run(_strip_ids(surviving), tracker_params)
    else:
        effective = replace(perturb_params, seed=derive_seed(seed, perturb_params.seed))
        detections = perturb_detections(surviving, effective, info)
        if mode is ExperimentMode.DETECTION_ERRORS:
            hyp = assign_gt_ids(detections, gt_surviving, id_gate)
        else:
            hyp = run(_flatten(detections), tracker_params)
    return evaluate(gt_surviving, hyp, match_iou)


@dataclass(frozen=True)
class SweepRow:
    """One (mode, p, seed) evaluation outcome."""

    mode: ExperimentMode
    p: float
    seed: int
    report: MotaReport


def _sweep_point(args) -> SweepRow:
    mode, gt, p, seed, info, tracker_params, perturb_params, match_iou, id_gate = args
    report = run_mode(
        mode, gt, p, seed, info, tracker_params, perturb_params, match_iou, id_gate
    )
    return SweepRow(mode, p, seed, report)


def sweep(
    mode: ExperimentMode,
    gt: Sequence[Track],
    p_values: Sequence[float],
    n_seeds: int,
    info: SequenceInfo,
    base_seed: int = 42,
    tracker_params: TrackerParams = TrackerParams(),
    perturb_params: PerturbParams = PerturbParams(),
    match_iou: float = 0.5,
    id_gate: float = 0.5,
    jobs: int = 1,
) -> list[SweepRow]:
    """Evaluate a grid of skip probabilities, n_seeds runs each.

    Seeds are base_seed .. base_seed + n_seeds - 1. Points are independent
    and may run in parallel (jobs > 1); rows always come back ordered by
    (p, seed) regardless of completion order.
    """
    tasks = [
        (mode, list(gt), float(p), base_seed + k, info, tracker_params, perturb_params, match_iou, id_gate)
        for p in sorted(p_values)
        for k in range(n_seeds)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(task) for task in tasks]
    return sorted(rows, key=lambda r: (r.p, r.seed))


def sweep_means(rows: Sequence[SweepRow]) -> dict[float, dict[str, float]]:
    """Per-p means of the counts and MOTA across seeds."""
    grouped: dict[float, list[SweepRow]] = {}
    for row in rows:
        grouped.setdefault(row.p, []).append(row)
    means: dict[float, dict[str, float]] = {}
    for p in sorted(grouped):
        group = grouped[p]
        n = len(group)
        means[p] = {
            "fp": sum(r.report.counts.fp for r in group) / n,
            "fn": sum(r.report.counts.fn for r in group) / n,
            "idsw": sum(r.report.counts.idsw for r in group) / n,
            "gt": sum(r.report.counts.gt for r in group) / n,
            "mota": sum(r.report.mota for r in group) / n,
        }
    return means


def format_experiments_csv(rows: Sequence[SweepRow]) -> str:
    """Per-seed rows grouped by ascending p, each p followed by its mean row."""
    means = sweep_means(rows)
    lines = [EXPERIMENTS_CSV_HEADER]
    for p in sorted(means):
        for row in (r for r in rows if r.p == p):
            c = row.report.counts
            lines.append(
                f"{row.mode.value},{fmt_real(p)},{row.seed},"
                f"{c.fp},{c.fn},{c.idsw},{c.gt},{fmt_real(row.report.mota)}"
            )
        m = means[p]
        mode_value = rows[0].mode.value if rows else ""
        lines.append(
            f"{mode_value},{fmt_real(p)},mean,{fmt_real(m['fp'])},{fmt_real(m['fn'])},"
            f"{fmt_real(m['idsw'])},{fmt_real(m['gt'])},{fmt_real(m['mota'])}"
        )
    return "".join(line + "\n" for line in lines)
