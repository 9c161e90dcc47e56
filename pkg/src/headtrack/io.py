"""Readers and writers for detection, track, label, and heatmap files.

Formats
-------
MOT-CSV     10 comma-separated numeric fields per line:
            frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z
            with frame >= 1, id = -1 for detections or id >= 1 for
            tracked boxes, and x,y,z always written as -1.
VOC XML     one file per frame with <size> and <object><bndbox> entries;
            the frame index is the numeric filename stem.
PGM (P5)    binary graymap, maxval 65535, big-endian 16-bit samples.
label CSV   header "track_id,label" with label in {0,1,2}.

All text output uses line-feed endings; reals print to 6 significant
digits; writers are byte-deterministic given identical inputs.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import FormatError, InvariantError, MissingIdError
from .heatmap import Heatmap
from .model import BoundingBox, ClassLabel, Detection, Track, TrackedBox, group_tracks

__all__ = [
    "read_mot_csv",
    "read_mot_detections",
    "read_mot_tracks",
    "write_mot_csv",
    "read_voc_xml_dir",
    "write_pgm16",
    "write_heatmap_csv",
    "read_labels",
    "write_labels",
    "fmt_real",
]

_MOT_FIELDS = 10


def fmt_real(value: float) -> str:
    """Render a real to 6 significant digits (the toolkit's CSV convention)."""
    return "%.6g" % (float(value) + 0.0)


def _parse_float(text: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"non-numeric field {text!r}", line=line) from None


def _parse_int(text: str, line: int, name: str) -> int:
    value = _parse_float(text, line)
    if value != int(value):
        raise FormatError(f"{name} must be an integer, got {text!r}", line=line)
    return int(value)


def read_mot_csv(path) -> list[Detection] | list[Track]:
    """Read a MOT-CSV file as detections (all ids -1) or tracks (all ids >= 1).

    Mixing both row kinds in one file is an error, as are duplicate
    (frame, id) pairs and nonpositive box sizes. An empty file loads as
    an empty list.
    """
    detections: list[Detection] = []
    tracked: list[TrackedBox] = []
    seen: set[tuple[int, int]] = set()
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            fields = text.split(",")
            if len(fields) != _MOT_FIELDS:
                raise FormatError(
                    f"expected {_MOT_FIELDS} fields, got {len(fields)}", line=lineno
                )
            frame = _parse_int(fields[0], lineno, "frame")
            row_id = _parse_int(fields[1], lineno, "id")
            left, top = _parse_float(fields[2], lineno), _parse_float(fields[3], lineno)
            width, height = _parse_float(fields[4], lineno), _parse_float(fields[5], lineno)
            conf = _parse_float(fields[6], lineno)
            for extra in fields[7:]:
                _parse_float(extra, lineno)
            if frame < 1:
                raise InvariantError(f"line {lineno}: frame must be >= 1, got {frame}")
            try:
                bbox = BoundingBox(left, top, width, height)
            except InvariantError as exc:
                raise InvariantError(f"line {lineno}: {exc}") from None
            if row_id == -1:
                try:
                    detections.append(Detection(frame, bbox, conf))
                except InvariantError as exc:
                    raise InvariantError(f"line {lineno}: {exc}") from None
            elif row_id >= 1:
                if (frame, row_id) in seen:
                    raise InvariantError(
                        f"line {lineno}: duplicate (frame, id) = ({frame}, {row_id})"
                    )
                seen.add((frame, row_id))
                tracked.append(TrackedBox(frame, row_id, bbox))
            else:
                raise InvariantError(f"line {lineno}: id must be -1 or >= 1, got {row_id}")
    if detections and tracked:
        raise InvariantError(f"{path}: mixes detection rows (id -1) and track rows (id >= 1)")
    if tracked:
        return group_tracks(tracked)
    return detections


def read_mot_detections(path) -> list[Detection]:
    """Read a MOT-CSV file that must contain detection rows only."""
    items = read_mot_csv(path)
    if items and isinstance(items[0], Track):
        raise InvariantError(f"{path}: expected detection rows (id -1), found track rows")
    return items  # type: ignore[return-value]


def read_mot_tracks(path) -> list[Track]:
    """Read a MOT-CSV file that must contain track rows only."""
    items = read_mot_csv(path)
    if items and isinstance(items[0], Detection):
        raise InvariantError(f"{path}: expected track rows (id >= 1), found detection rows")
    return items  # type: ignore[return-value]


def _mot_row(frame: int, row_id: int, bbox: BoundingBox, conf: float) -> str:
    if frame < 1:
        raise InvariantError(f"cannot write frame {frame}: MOT rows are 1-based")
    return ",".join(
        [
            str(frame),
            str(row_id),
            fmt_real(bbox.x_left),
            fmt_real(bbox.y_top),
            fmt_real(bbox.width),
            fmt_real(bbox.height),
            fmt_real(conf),
            "-1",
            "-1",
            "-1",
        ]
    )


def write_mot_csv(items: Iterable[Detection] | Iterable[Track] | Iterable[TrackedBox], path) -> None:
    """Write detections, tracks, or tracked boxes as MOT-CSV.

    Detections keep their input order; track rows are emitted sorted by
    (frame, id) with confidence 1. Reading the file back yields the same
    items for values representable at 6 significant digits.
    """
    items = list(items)
    lines: list[str] = []
    if items and isinstance(items[0], Detection):
        for det in items:
            lines.append(_mot_row(det.frame_index, -1, det.bbox, det.confidence))
    else:
        boxes: list[TrackedBox] = []
        for item in items:
            if isinstance(item, Track):
                boxes.extend(item.points)
            else:
                boxes.append(item)
        boxes.sort(key=lambda b: (b.frame_index, b.track_id))
        for box in boxes:
            lines.append(_mot_row(box.frame_index, box.track_id, box.bbox, 1.0))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="ascii")


def _xml_float(obj: ET.Element, tag: str, source: str) -> float:
    node = obj.find(tag)
    if node is None or node.text is None:
        raise FormatError(f"{source}: missing bndbox field {tag!r}")
    return float(node.text)


def read_voc_xml_dir(
    dir_path, track_id_tag: str = "trackid", require_ids: bool = True
) -> list[TrackedBox] | list[Detection]:
    """Read a directory of per-frame VOC-style XML annotation files.

    Corner-form boxes (xmin, ymin, xmax, ymax) convert to (left, top,
    width, height); the frame index comes from the numeric filename stem
    (``000042.xml`` -> frame 42). Track IDs are read from the
    `track_id_tag` child of each object; with ``require_ids=False``
    objects load as Detections with confidence 1 instead.
    """
    directory = Path(dir_path)
    files = sorted(directory.glob("*.xml"))
    entries: list[tuple[int, Path]] = []
    for file in files:
        try:
            frame = int(file.stem)
        except ValueError:
            raise FormatError(f"{file.name}: filename stem is not a frame number") from None
        entries.append((frame, file))
    entries.sort(key=lambda e: e[0])

    tracked: list[TrackedBox] = []
    detections: list[Detection] = []
    for frame, file in entries:
        root = ET.parse(file).getroot()
        for obj in root.iter("object"):
            bndbox = obj.find("bndbox")
            if bndbox is None:
                raise FormatError(f"{file.name}: object without bndbox")
            xmin = _xml_float(bndbox, "xmin", file.name)
            ymin = _xml_float(bndbox, "ymin", file.name)
            xmax = _xml_float(bndbox, "xmax", file.name)
            ymax = _xml_float(bndbox, "ymax", file.name)
            bbox = BoundingBox(xmin, ymin, xmax - xmin, ymax - ymin)
            if require_ids:
                id_node = obj.find(track_id_tag)
                if id_node is None or id_node.text is None:
                    raise MissingIdError(
                        f"{file.name}: object has no <{track_id_tag}> element"
                    )
                tracked.append(TrackedBox(frame, int(id_node.text), bbox))
            else:
                detections.append(Detection(frame, bbox, 1.0))
    return tracked if require_ids else detections


def write_pgm16(grid: Heatmap, path) -> None:
    """Write a heatmap as a binary 16-bit PGM, scaled so the max cell maps to 65535.

    Sample value is round-half-up of cell * 65535 / max_cell, computed in
    exact integer arithmetic; an all-zero grid writes all zeros.
    """
    cells = grid.cells.astype(np.int64)
    peak = int(cells.max()) if cells.size else 0
    if peak == 0:
        samples = np.zeros(cells.shape, dtype=">u2")
    else:
        samples = ((2 * cells * 65535 + peak) // (2 * peak)).astype(">u2")
    header = f"P5\n{grid.width} {grid.height}\n65535\n".encode("ascii")
    Path(path).write_bytes(header + samples.tobytes())


def write_heatmap_csv(grid: Heatmap, path) -> None:
    """Lossless heatmap dump as "x,y,count" rows; zero cells are omitted."""
    lines = ["x,y,count"]
    ys, xs = np.nonzero(grid.cells)
    for y, x in zip(ys.tolist(), xs.tolist()):
        lines.append(f"{x},{y},{int(grid.cells[y, x])}")
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="ascii")


def read_labels(path) -> dict[int, ClassLabel]:
    """Read a label CSV (header "track_id,label") into a track_id -> label map."""
    labels: dict[int, ClassLabel] = {}
    with open(path, "r", encoding="ascii") as fh:
        lines = [line.strip() for line in fh]
    lines = [line for line in lines if line]
    if not lines or lines[0] != "track_id,label":
        raise FormatError('label file must start with header "track_id,label"', line=1)
    for lineno, text in enumerate(lines[1:], start=2):
        fields = text.split(",")
        if len(fields) != 2:
            raise FormatError(f"expected 2 fields, got {len(fields)}", line=lineno)
        track_id = _parse_int(fields[0], lineno, "track_id")
        value = _parse_int(fields[1], lineno, "label")
        if value not in (0, 1, 2):
            raise FormatError(f"label must be in {{0,1,2}}, got {value}", line=lineno)
        if track_id in labels:
            raise InvariantError(f"line {lineno}: duplicate track_id {track_id}")
        labels[track_id] = ClassLabel(value)
    return labels


def write_labels(labels: Mapping[int, ClassLabel], path) -> None:
    """Write a track_id -> label map as CSV, sorted by track id."""
    lines = ["track_id,label"]
    for track_id in sorted(labels):
        lines.append(f"{track_id},{int(labels[track_id])}")
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="ascii")
