import numpy as np
import pytest

from headtrack import io
from headtrack.errors import FormatError, InvariantError, MissingIdError
from headtrack.heatmap import Heatmap
from headtrack.model import BoundingBox, ClassLabel, Detection, Track, TrackedBox

from conftest import random_detections, random_tracks


class TestMotCsvRead:
    def test_detection_row(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("1,-1,10,20,30,40,0.9,-1,-1,-1\n")
        items = io.read_mot_csv(path)
        assert items == [Detection(1, BoundingBox(10, 20, 30, 40), 0.9)]

    def test_track_row(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("3,7,0,0,5,5,1,-1,-1,-1\n")
        (track,) = io.read_mot_csv(path)
        assert track.track_id == 7
        assert track.points[0].frame_index == 3

    def test_duplicate_frame_in_track(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("2,7,0,0,5,5,1,-1,-1,-1\n2,7,1,1,5,5,1,-1,-1,-1\n")
        with pytest.raises(InvariantError):
            io.read_mot_csv(path)

    def test_wrong_arity(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,-1,10,20,30\n")
        with pytest.raises(FormatError) as err:
            io.read_mot_csv(path)
        assert err.value.line == 1

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,-1,ten,20,30,40,1,-1,-1,-1\n")
        with pytest.raises(FormatError):
            io.read_mot_csv(path)

    def test_mixed_kinds_rejected(self, tmp_path):
        path = tmp_path / "mixed.csv"
        path.write_text("1,-1,0,0,5,5,1,-1,-1,-1\n1,3,0,0,5,5,1,-1,-1,-1\n")
        with pytest.raises(InvariantError):
            io.read_mot_csv(path)

    def test_zero_id_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,0,0,0,5,5,1,-1,-1,-1\n")
        with pytest.raises(InvariantError):
            io.read_mot_csv(path)

    def test_nonpositive_size_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,-1,0,0,0,5,1,-1,-1,-1\n")
        with pytest.raises(InvariantError):
            io.read_mot_csv(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        assert io.read_mot_csv(path) == []

    def test_kind_specific_readers(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("3,7,0,0,5,5,1,-1,-1,-1\n")
        with pytest.raises(InvariantError):
            io.read_mot_detections(path)
        assert len(io.read_mot_tracks(path)) == 1


class TestMotCsvRoundTrip:
    def test_empty_write(self, tmp_path):
        path = tmp_path / "out.csv"
        io.write_mot_csv([], path)
        assert path.read_bytes() == b""

    def test_single_detection_bytes(self, tmp_path):
        path = tmp_path / "out.csv"
        io.write_mot_csv([Detection(1, BoundingBox(10, 20, 30, 40), 0.9)], path)
        assert path.read_text() == "1,-1,10,20,30,40,0.9,-1,-1,-1\n"

    def test_detection_round_trip(self, rng, tmp_path):
        detections = random_detections(rng, 300)
        path = tmp_path / "d.csv"
        io.write_mot_csv(detections, path)
        assert io.read_mot_csv(path) == detections

    def test_track_round_trip(self, rng, tmp_path):
        tracks = random_tracks(rng, 40)
        path = tmp_path / "t.csv"
        io.write_mot_csv(tracks, path)
        assert io.read_mot_csv(path) == tracks

    def test_writes_are_deterministic(self, rng, tmp_path):
        tracks = random_tracks(rng, 10)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        io.write_mot_csv(tracks, a)
        io.write_mot_csv(tracks, b)
        assert a.read_bytes() == b.read_bytes()

    def test_frame_zero_rejected_on_write(self, tmp_path):
        det = Detection(0, BoundingBox(0, 0, 5, 5), 1.0)
        with pytest.raises(InvariantError):
            io.write_mot_csv([det], tmp_path / "out.csv")


def _voc_file(tmp_path, name, objects, size=(640, 480)):
    entries = []
    for obj in objects:
        xmin, ymin, xmax, ymax, track_id = obj
        id_part = f"<trackid>{track_id}</trackid>" if track_id is not None else ""
        entries.append(
            f"<object><name>head</name>{id_part}"
            f"<bndbox><xmin>{xmin}</xmin><ymin>{ymin}</ymin>"
            f"<xmax>{xmax}</xmax><ymax>{ymax}</ymax></bndbox></object>"
        )
    content = (
        "<annotation>"
        f"<size><width>{size[0]}</width><height>{size[1]}</height></size>"
        + "".join(entries)
        + "</annotation>"
    )
    (tmp_path / name).write_text(content)


class TestVocXml:
    def test_corner_to_size(self, tmp_path):
        _voc_file(tmp_path, "000001.xml", [(10, 10, 20, 30, 4)])
        (item,) = io.read_voc_xml_dir(tmp_path)
        assert item.bbox == BoundingBox(10, 10, 10, 20)
        assert item.track_id == 4

    def test_frame_from_filename(self, tmp_path):
        _voc_file(tmp_path, "000042.xml", [(0, 0, 5, 5, 1)])
        (item,) = io.read_voc_xml_dir(tmp_path)
        assert item.frame_index == 42

    def test_empty_object_list(self, tmp_path):
        _voc_file(tmp_path, "000003.xml", [])
        assert io.read_voc_xml_dir(tmp_path) == []

    def test_missing_id(self, tmp_path):
        _voc_file(tmp_path, "000001.xml", [(0, 0, 5, 5, None)])
        with pytest.raises(MissingIdError):
            io.read_voc_xml_dir(tmp_path)
        (det,) = io.read_voc_xml_dir(tmp_path, require_ids=False)
        assert det.confidence == 1.0

    def test_missing_bndbox_field(self, tmp_path):
        (tmp_path / "000001.xml").write_text(
            "<annotation><object><bndbox><xmin>1</xmin></bndbox></object></annotation>"
        )
        with pytest.raises(FormatError):
            io.read_voc_xml_dir(tmp_path)

    def test_custom_id_tag(self, tmp_path):
        (tmp_path / "000007.xml").write_text(
            "<annotation><object><pid>9</pid><bndbox><xmin>0</xmin><ymin>0</ymin>"
            "<xmax>4</xmax><ymax>4</ymax></bndbox></object></annotation>"
        )
        (item,) = io.read_voc_xml_dir(tmp_path, track_id_tag="pid")
        assert item.track_id == 9


def _parse_pgm(data: bytes):
    assert data.startswith(b"P5\n")
    header, _, rest = data.partition(b"\n65535\n")
    dims = header.split(b"\n")[1].split()
    width, height = int(dims[0]), int(dims[1])
    samples = np.frombuffer(rest, dtype=">u2").reshape(height, width)
    return samples


class TestPgm16:
    def test_all_zero(self, tmp_path):
        grid = Heatmap(2, 2, np.zeros((2, 2), dtype=np.int64))
        path = tmp_path / "z.pgm"
        io.write_pgm16(grid, path)
        assert _parse_pgm(path.read_bytes()).tolist() == [[0, 0], [0, 0]]

    def test_scaling_rounds_half_up(self, tmp_path):
        grid = Heatmap(2, 1, np.array([[1, 2]], dtype=np.int64))
        path = tmp_path / "s.pgm"
        io.write_pgm16(grid, path)
        assert _parse_pgm(path.read_bytes()).tolist() == [[32768, 65535]]

    def test_max_maps_to_maxval(self, tmp_path):
        grid = Heatmap(1, 1, np.array([[7]], dtype=np.int64))
        path = tmp_path / "m.pgm"
        io.write_pgm16(grid, path)
        assert _parse_pgm(path.read_bytes()).tolist() == [[65535]]

    def test_header_layout(self, tmp_path):
        grid = Heatmap(3, 2, np.arange(6, dtype=np.int64).reshape(2, 3))
        path = tmp_path / "h.pgm"
        io.write_pgm16(grid, path)
        data = path.read_bytes()
        assert data.startswith(b"P5\n3 2\n65535\n")
        assert len(data) == len(b"P5\n3 2\n65535\n") + 2 * 6


class TestLabels:
    def test_examples(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("track_id,label\n5,0\n9,2\n")
        assert io.read_labels(path) == {5: ClassLabel.CUSTOMER, 9: ClassLabel.ERROR}

    def test_out_of_range_label(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("track_id,label\n9,4\n")
        with pytest.raises(FormatError):
            io.read_labels(path)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("track_id,label\n9,1\n9,2\n")
        with pytest.raises(InvariantError):
            io.read_labels(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("5,0\n")
        with pytest.raises(FormatError):
            io.read_labels(path)

    def test_round_trip(self, rng, tmp_path):
        labels = {
            int(track_id): ClassLabel(int(rng.integers(0, 3)))
            for track_id in rng.choice(np.arange(1, 5000), size=300, replace=False)
        }
        path = tmp_path / "l.csv"
        io.write_labels(labels, path)
        assert io.read_labels(path) == labels


class TestHeatmapCsv:
    def test_zero_cells_omitted(self, tmp_path):
        cells = np.zeros((2, 3), dtype=np.int64)
        cells[1, 2] = 5
        cells[0, 1] = 1
        path = tmp_path / "hm.csv"
        io.write_heatmap_csv(Heatmap(3, 2, cells), path)
        assert path.read_text() == "x,y,count\n1,0,1\n2,1,5\n"
