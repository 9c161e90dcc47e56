"""CLEAR-style correspondence counting and the MOTA summary score.

Per frame, correspondences established earlier persist while their pair
still overlaps at the gate; remaining boxes re-match by Hungarian
assignment maximizing the number of gated matches and then total IOU.
Unmatched ground-truth boxes count as misses (FN), unmatched hypothesis
boxes as false positives (FP), and an identity switch (IDSW) is counted
whenever a ground-truth identity matches a hypothesis id different from
the last one it was ever matched to. MOTA = 1 - (FN + FP + IDSW) / GT.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .assignment import match_boxes_max_iou
from .errors import EmptyGroundTruthError, InvariantError
from .io import fmt_real
from .model import Track, boxes_by_frame, iou_matrix

__all__ = [
    "MotCounts",
    "MotaReport",
    "evaluate",
    "evaluate_sweep_point",
    "format_sweep_csv",
    "SWEEP_CSV_HEADER",
]

SWEEP_CSV_HEADER = "p,fp,fn,idsw,gt,mota"


@dataclass(frozen=True)
class MotCounts:
    """Whole-sequence error counts against ground truth."""

    fp: int
    fn: int
    idsw: int
    gt: int

    def __post_init__(self):
        if min(self.fp, self.fn, self.idsw, self.gt) < 0:
            raise InvariantError("counts must be nonnegative")
        if self.fn > self.gt:
            raise InvariantError(f"fn={self.fn} cannot exceed gt={self.gt}")


@dataclass(frozen=True)
class MotaReport:
    """MotCounts plus the derived MOTA score in (-inf, 1]."""

    counts: MotCounts
    mota: float

    @classmethod
    def from_counts(cls, counts: MotCounts) -> "MotaReport":
        c = counts
        return cls(c, 1.0 - (c.fn + c.fp + c.idsw) / c.gt)


def _index_by_id(boxes) -> dict[int, int]:
    by_id: dict[int, int] = {}
    for index, box in enumerate(boxes):
        if box.track_id in by_id:
            raise InvariantError(
                f"frame {box.frame_index}: track id {box.track_id} appears twice"
            )
        by_id[box.track_id] = index
    return by_id


def evaluate(gt: Sequence[Track], hyp: Sequence[Track], match_iou: float = 0.5) -> MotaReport:
    """Score hypothesis tracks against ground-truth tracks.

    Raises EmptyGroundTruthError when the ground truth holds no boxes.
    """
    gt_frames = boxes_by_frame(gt)
    hyp_frames = boxes_by_frame(hyp)
    total_gt = sum(len(v) for v in gt_frames.values())
    if total_gt == 0:
        raise EmptyGroundTruthError("ground truth contains no boxes")

    last_match: dict[int, int] = {}  # gt id -> hypothesis id it last matched
    fp = fn = idsw = 0
    for frame in sorted(set(gt_frames) | set(hyp_frames)):
        g_boxes = gt_frames.get(frame, [])
        h_boxes = hyp_frames.get(frame, [])
        _index_by_id(g_boxes)
        h_by_id = _index_by_id(h_boxes)
        matched_g: set[int] = set()
        matched_h: set[int] = set()

        # Keep earlier correspondences alive where both parties are present
        # and still overlap; lower gt ids claim a contested hypothesis first.
        if g_boxes and h_boxes:
            ious = iou_matrix([b.bbox for b in g_boxes], [b.bbox for b in h_boxes])
            for gi in sorted(range(len(g_boxes)), key=lambda i: g_boxes[i].track_id):
                partner = last_match.get(g_boxes[gi].track_id)
                if partner is None:
                    continue
                hj = h_by_id.get(partner)
                if hj is None or hj in matched_h:
                    continue
                if ious[gi, hj] >= match_iou:
                    matched_g.add(gi)
                    matched_h.add(hj)

        rem_g = [i for i in range(len(g_boxes)) if i not in matched_g]
        rem_h = [j for j in range(len(h_boxes)) if j not in matched_h]
        if rem_g and rem_h:
            pairs = match_boxes_max_iou(
                [g_boxes[i].bbox for i in rem_g],
                [h_boxes[j].bbox for j in rem_h],
                match_iou,
            )
            for ri, rj in pairs:
                gi, hj = rem_g[ri], rem_h[rj]
                gt_id = g_boxes[gi].track_id
                hyp_id = h_boxes[hj].track_id
                previous = last_match.get(gt_id)
                if previous is not None and previous != hyp_id:
                    idsw += 1
                last_match[gt_id] = hyp_id
                matched_g.add(gi)
                matched_h.add(hj)

        fn += len(g_boxes) - len(matched_g)
        fp += len(h_boxes) - len(matched_h)

    counts = MotCounts(fp=fp, fn=fn, idsw=idsw, gt=total_gt)
    return MotaReport.from_counts(counts)


def evaluate_sweep_point(
    p: float, gt: Sequence[Track], hyp: Sequence[Track], match_iou: float = 0.5
) -> tuple[float, MotaReport]:
    """Evaluate one skip-probability point; pairs the p value with its report."""
    return (float(p), evaluate(gt, hyp, match_iou))


def format_sweep_csv(points: Iterable[tuple[float, MotaReport]]) -> str:
    """Render (p, report) points as CSV rows in ascending p order."""
    lines = [SWEEP_CSV_HEADER]
    for p, report in sorted(points, key=lambda pr: pr[0]):
        c = report.counts
        lines.append(
            f"{fmt_real(p)},{c.fp},{c.fn},{c.idsw},{c.gt},{fmt_real(report.mota)}"
        )
    return "".join(line + "\n" for line in lines)
