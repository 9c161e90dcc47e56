"""Command-line interface: one subcommand per pipeline stage.

Exit codes: 0 success, 1 usage error, 2 input format/invariant error,
3 numeric failure. Outputs are written only under --out; each run prints
a one-line summary to stdout.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import classifier, evaluation, experiments, heatmap, io, simulator, tracker
from .errors import NumericError, ToolkitError
from .model import ClassLabel, SequenceInfo, boxes_by_frame

__all__ = ["build_parser", "dispatch", "main"]


class _Parser(argparse.ArgumentParser):
    # Usage problems must exit 1 (argparse defaults to 2).
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _add_tracker_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--iou-gate", type=float, default=0.3, help="association IOU gate")
    parser.add_argument("--max-age", type=int, default=3, help="frames a track may go unmatched")
    parser.add_argument("--min-hits", type=int, default=3, help="hits before a track is emitted")
    parser.add_argument("--process-noise", type=float, default=1.0, help="process noise scale")
    parser.add_argument("--measurement-noise", type=float, default=1.0, help="measurement noise scale")


def _add_perturb_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--center-jitter", type=float, default=2.0, help="center jitter std (px)")
    parser.add_argument("--size-jitter", type=float, default=0.05, help="log-scale size jitter std")
    parser.add_argument("--miss-prob", type=float, default=0.1, help="per-box miss probability")
    parser.add_argument("--fp-per-frame", type=float, default=0.2, help="expected spurious boxes per frame")


def _add_frame_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--width", type=int, default=1280, help="frame width in pixels")
    parser.add_argument("--height", type=int, default=720, help="frame height in pixels")
    parser.add_argument("--fps", type=float, default=25.0, help="frame rate")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="headtrack",
        description="Tracking-by-detection toolkit: track, evaluate, experiment, classify.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name, help_text):
        p = sub.add_parser(
            name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter
        )
        p.add_argument("--seed", type=int, default=42, help="random seed")
        return p

    p = command("track", "run the tracker over a detections CSV")
    p.add_argument("--det", required=True, help="detections MOT-CSV (id -1 rows)")
    _add_tracker_flags(p)
    p.add_argument("--out", required=True, help="output tracks MOT-CSV")

    p = command("eval", "score hypothesis tracks against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth tracks MOT-CSV")
    p.add_argument("--hyp", required=True, help="hypothesis tracks MOT-CSV")
    p.add_argument("--match-iou", type=float, default=0.5, help="correspondence IOU gate")
    p.add_argument("--out", default=None, help="optional report CSV")

    p = command("sweep", "skip-frame sweep for one error-decomposition mode")
    p.add_argument(
        "--mode", required=True, choices=["detection", "tracking", "compound"],
        help="which components contribute errors",
    )
    p.add_argument("--gt", required=True, help="ground-truth tracks MOT-CSV")
    p.add_argument("--p-grid", default="0:0.9:0.1", help="skip probabilities start:stop:step or a single value")
    p.add_argument("--seeds", type=int, default=5, help="seeds per grid point")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for sweep points")
    p.add_argument("--match-iou", type=float, default=0.5, help="correspondence IOU gate")
    _add_tracker_flags(p)
    _add_perturb_flags(p)
    _add_frame_flags(p)
    p.add_argument("--out", required=True, help="output sweep CSV")

    p = command("perturb", "apply the synthetic detector-error model to ground truth")
    p.add_argument("--gt", required=True, help="ground-truth tracks MOT-CSV")
    _add_perturb_flags(p)
    _add_frame_flags(p)
    p.add_argument("--out", required=True, help="output detections MOT-CSV")

    p = command("heatmap", "rasterize tracks into exposure heatmaps")
    p.add_argument("--tracks", required=True, help="tracks MOT-CSV")
    _add_frame_flags(p)
    p.add_argument(
        "--radius-rule", default="mean-half-extent", choices=sorted(heatmap.RADIUS_RULES),
        help="circle radius rule",
    )
    p.add_argument("--aggregate", action="store_true", help="write the all-tracks aggregate")
    p.add_argument("--per-track", action="store_true", help="write one heatmap per track")
    p.add_argument("--format", default="pgm", choices=["pgm", "csv"], help="heatmap file format")
    p.add_argument("--features", action="store_true", help="also write pooled features.csv")
    p.add_argument("--g", type=int, default=64, help="pooling grid size for --features")
    p.add_argument("--out", required=True, help="output directory")

    p = command("filter", "keep only long tracks (frames AND distance)")
    p.add_argument("--tracks", required=True, help="tracks MOT-CSV")
    p.add_argument("--min-frames", type=int, default=2000, help="minimum frames per track")
    p.add_argument(
        "--min-distance-factor", type=float, default=2.0,
        help="minimum path length as a multiple of frame width",
    )
    p.add_argument("--width", type=int, default=1280, help="frame width in pixels")
    p.add_argument("--out", required=True, help="output tracks MOT-CSV")

    p = command("sample-size", "finite-population sample size")
    p.add_argument("--n", type=int, required=True, help="population size")
    p.add_argument("--confidence", type=float, default=0.95, help="confidence level")
    p.add_argument("--margin", type=float, default=0.05, help="margin of error")
    p.add_argument("--proportion", type=float, default=0.5, help="expected proportion")

    p = command("sample", "uniform track sample without replacement")
    p.add_argument("--tracks", required=True, help="tracks MOT-CSV")
    p.add_argument("--n", type=int, required=True, help="sample size")
    p.add_argument("--out", required=True, help="output tracks MOT-CSV")

    p = command("histogram", "per-hour activity counts")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--tracks", help="tracks MOT-CSV")
    group.add_argument("--det", help="detections MOT-CSV")
    p.add_argument("--fps", type=float, default=25.0, help="frame rate")
    p.add_argument(
        "--by", default="box", choices=["box", "track"],
        help="count boxes per hour, or tracks by their first frame",
    )
    p.add_argument("--out", required=True, help="output histogram CSV")

    p = command("simulate", "generate synthetic ground truth")
    p.add_argument("--agents", type=int, default=None, help="shared-timeline sequence with N agents")
    p.add_argument("--customers", type=int, default=0, help="labeled population: customer tracks")
    p.add_argument("--staff", type=int, default=0, help="labeled population: staff tracks")
    p.add_argument("--errors", type=int, default=0, help="labeled population: error tracks")
    p.add_argument("--duration", type=int, default=300, help="sequence length in frames")
    p.add_argument("--layout", default=None, help="layout file (defaults to the built-in floor)")
    p.add_argument("--separated", action="store_true", help="non-overlapping lane agents")
    p.add_argument(
        "--out", required=True,
        help="output MOT-CSV for --agents, or a directory (tracks.csv + labels.csv) for a population",
    )

    p = command("train", "fit the softmax classifier")
    p.add_argument("--features", default=None, help="features CSV (from `heatmap --features`)")
    p.add_argument("--tracks", default=None, help="tracks MOT-CSV (features computed on the fly)")
    p.add_argument("--labels", required=True, help="labels CSV")
    _add_frame_flags(p)
    p.add_argument("--g", type=int, default=64, help="pooling grid size")
    p.add_argument("--lr", type=float, default=0.1, help="learning rate")
    p.add_argument("--iters", type=int, default=500, help="gradient-descent iterations")
    p.add_argument("--l2", type=float, default=1e-4, help="L2 penalty")
    p.add_argument("--split", default="60,20,20", help="train/val/test percentages")
    p.add_argument("--out", required=True, help="output directory (model.txt + accuracy.csv)")

    p = command("predict", "classify feature vectors with a trained model")
    p.add_argument("--model", required=True, help="model file from `train`")
    p.add_argument("--features", required=True, help="features CSV")
    p.add_argument("--out", required=True, help="output predictions CSV")

    p = command("gradcheck", "verify the training gradient against finite differences")
    p.add_argument("--features", required=True, help="features CSV")
    p.add_argument("--labels", required=True, help="labels CSV")
    p.add_argument("--l2", type=float, default=1e-4, help="L2 penalty")
    p.add_argument("--batch", type=int, default=50, help="samples to check (max 50)")

    return parser


def _tracker_params(args) -> tracker.TrackerParams:
    return tracker.TrackerParams(
        iou_gate=args.iou_gate,
        max_age=args.max_age,
        min_hits=args.min_hits,
        process_noise_scale=args.process_noise,
        measurement_noise_scale=args.measurement_noise,
    )


def _perturb_params(args) -> experiments.PerturbParams:
    return experiments.PerturbParams(
        center_jitter_std=args.center_jitter,
        size_jitter_std=args.size_jitter,
        miss_prob=args.miss_prob,
        fp_per_frame=args.fp_per_frame,
        seed=args.seed,
    )


def _sequence_info(args, tracks=None) -> SequenceInfo:
    frame_count = 1
    if tracks:
        frame_count = max(t.last_frame for t in tracks)
    return SequenceInfo(args.width, args.height, max(frame_count, 1), args.fps)


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        count = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return [float(text)]


def _cmd_track(args) -> str:
    detections = io.read_mot_detections(args.det)
    tracks = tracker.run(detections, _tracker_params(args))
    io.write_mot_csv(tracks, args.out)
    boxes = sum(len(t.points) for t in tracks)
    return f"tracks={len(tracks)} boxes={boxes} out={args.out}"


def _cmd_eval(args) -> str:
    gt = io.read_mot_tracks(args.gt)
    hyp = io.read_mot_tracks(args.hyp)
    report = evaluation.evaluate(gt, hyp, args.match_iou)
    c = report.counts
    if args.out:
        Path(args.out).write_text(
            "fp,fn,idsw,gt,mota\n"
            f"{c.fp},{c.fn},{c.idsw},{c.gt},{io.fmt_real(report.mota)}\n",
            encoding="ascii",
        )
    shown = io.fmt_real(report.mota)
    if "." not in shown and "e" not in shown:
        shown += ".0"
    return f"mota={shown} fp={c.fp} fn={c.fn} idsw={c.idsw} gt={c.gt}"


_MODES = {
    "detection": experiments.ExperimentMode.DETECTION_ERRORS,
    "tracking": experiments.ExperimentMode.TRACKING_ERRORS,
    "compound": experiments.ExperimentMode.COMPOUND,
}


def _cmd_sweep(args) -> str:
    gt = io.read_mot_tracks(args.gt)
    p_values = _parse_grid(args.p_grid)
    rows = experiments.sweep(
        _MODES[args.mode],
        gt,
        p_values,
        args.seeds,
        _sequence_info(args, gt),
        base_seed=args.seed,
        tracker_params=_tracker_params(args),
        perturb_params=_perturb_params(args),
        match_iou=args.match_iou,
        jobs=args.jobs,
    )
    Path(args.out).write_text(experiments.format_experiments_csv(rows), encoding="ascii")
    means = experiments.sweep_means(rows)
    first, last = min(means), max(means)
    return (
        f"mode={args.mode} points={len(p_values)} seeds={args.seeds} "
        f"mota@p={io.fmt_real(first)}:{io.fmt_real(means[first]['mota'])} "
        f"mota@p={io.fmt_real(last)}:{io.fmt_real(means[last]['mota'])} out={args.out}"
    )


def _cmd_perturb(args) -> str:
    gt = io.read_mot_tracks(args.gt)
    frames = experiments.perturb_detections(
        boxes_by_frame(gt), _perturb_params(args), _sequence_info(args, gt)
    )
    detections = [d for f in sorted(frames) for d in frames[f]]
    io.write_mot_csv(detections, args.out)
    return f"detections={len(detections)} frames={len(frames)} out={args.out}"


def _cmd_heatmap(args) -> str:
    tracks = io.read_mot_tracks(args.tracks)
    info = _sequence_info(args, tracks)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    per_track = args.per_track
    aggregate = args.aggregate or not per_track
    written = 0

    def _write(grid, stem):
        nonlocal written
        if args.format == "pgm":
            io.write_pgm16(grid, out_dir / f"{stem}.pgm")
        else:
            io.write_heatmap_csv(grid, out_dir / f"{stem}.csv")
        written += 1

    total_mass = 0
    if per_track or aggregate:
        grids, total = heatmap.rasterize_all(tracks, info, args.radius_rule)
        total_mass = total.total_mass
        if per_track:
            for track_id in sorted(grids):
                _write(grids[track_id], f"track_{track_id:06d}")
        if aggregate:
            _write(total, "aggregate")
    if args.features:
        ids, feats = classifier.features_for_tracks(tracks, info, args.g, args.radius_rule)
        classifier.save_features(ids, feats, out_dir / "features.csv")
        written += 1
    return f"tracks={len(tracks)} files={written} aggregate_mass={total_mass} out={args.out}"


def _cmd_filter(args) -> str:
    tracks = io.read_mot_tracks(args.tracks)
    info = SequenceInfo(args.width, 1, 1, 1.0)
    params = heatmap.FilterParams(args.min_frames, args.min_distance_factor)
    kept = heatmap.filter_tracks(tracks, params, info)
    io.write_mot_csv(kept, args.out)
    return f"kept={len(kept)} dropped={len(tracks) - len(kept)} out={args.out}"


def _cmd_sample_size(args) -> str:
    spec = heatmap.SampleSpec(args.n, args.confidence, args.margin, args.proportion)
    return str(heatmap.sample_size(spec))


def _cmd_sample(args) -> str:
    tracks = io.read_mot_tracks(args.tracks)
    sampled = heatmap.sample_tracks(tracks, args.n, args.seed)
    io.write_mot_csv(sampled, args.out)
    return f"sampled={len(sampled)} of={len(tracks)} out={args.out}"


def _cmd_histogram(args) -> str:
    if args.tracks:
        tracks = io.read_mot_tracks(args.tracks)
        items = tracks if args.by == "track" else [b for t in tracks for b in t.points]
    else:
        items = io.read_mot_detections(args.det)
    frame_count = max((i.last_frame if hasattr(i, "last_frame") else i.frame_index for i in items), default=1)
    info = SequenceInfo(1, 1, max(frame_count, 1), args.fps)
    counts = heatmap.hourly_histogram(items, info)
    Path(args.out).write_text(heatmap.histogram_csv(counts), encoding="ascii")
    return f"hours={len(counts)} items={len(items)} out={args.out}"


def _cmd_simulate(args) -> str:
    layout = simulator.load_layout(args.layout) if args.layout else simulator.default_layout()
    if args.agents is not None:
        tracks = simulator.simulate_sequence(
            args.agents, layout, args.duration, args.seed, separated=args.separated
        )
        io.write_mot_csv(tracks, args.out)
        boxes = sum(len(t.points) for t in tracks)
        return f"tracks={len(tracks)} boxes={boxes} out={args.out}"
    if args.customers + args.staff + args.errors == 0:
        raise _UsageError("simulate needs --agents or at least one of --customers/--staff/--errors")
    tracks, labels = simulator.simulate_population(
        args.customers, args.staff, args.errors, layout, args.seed
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    io.write_mot_csv(tracks, out_dir / "tracks.csv")
    io.write_labels(labels, out_dir / "labels.csv")
    boxes = sum(len(t.points) for t in tracks)
    return f"tracks={len(tracks)} boxes={boxes} out={args.out}"


def _load_training_features(args) -> tuple[np.ndarray, np.ndarray]:
    if (args.features is None) == (args.tracks is None):
        raise _UsageError("train needs exactly one of --features or --tracks")
    if args.features:
        return classifier.load_features(args.features)
    tracks = io.read_mot_tracks(args.tracks)
    return classifier.features_for_tracks(tracks, _sequence_info(args, tracks), args.g)


def _cmd_train(args) -> str:
    ids, features = _load_training_features(args)
    label_map = io.read_labels(args.labels)
    try:
        labels = [int(label_map[int(i)]) for i in ids]
    except KeyError as exc:
        raise ToolkitError(f"no label for track id {exc.args[0]}") from None
    fractions = tuple(float(v) / 100.0 for v in args.split.split(","))
    config = classifier.TrainConfig(args.lr, args.iters, args.l2, fractions)
    result = classifier.train(features, labels, split_seed=args.seed, config=config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    classifier.save_model(result.model, out_dir / "model.txt")
    (out_dir / "accuracy.csv").write_text(
        classifier.accuracy_report_csv(result.accuracies), encoding="ascii"
    )
    acc = {k: v[0] for k, v in result.accuracies.items()}
    return (
        f"train={io.fmt_real(acc['train'])} val={io.fmt_real(acc['val'])} "
        f"test={io.fmt_real(acc['test'])} out={args.out}"
    )


def _cmd_predict(args) -> str:
    model = classifier.load_model(args.model)
    ids, features = classifier.load_features(args.features)
    labels, probs = classifier.predict_batch(model, features)
    lines = ["track_id,label,p0,p1,p2"]
    for i, track_id in enumerate(ids):
        p = ",".join(io.fmt_real(v) for v in probs[i])
        lines.append(f"{int(track_id)},{int(labels[i])},{p}")
    Path(args.out).write_text("".join(line + "\n" for line in lines), encoding="ascii")
    return f"predictions={len(ids)} out={args.out}"


def _cmd_gradcheck(args) -> str:
    ids, features = classifier.load_features(args.features)
    label_map = io.read_labels(args.labels)
    labels = [int(label_map.get(int(i), ClassLabel.CUSTOMER)) for i in ids]
    batch = min(args.batch, 50, len(ids))
    rng = np.random.default_rng(args.seed)
    grid = int(round(np.sqrt(features.shape[1])))
    config = classifier.TrainConfig(l2=args.l2)
    mean = features[:batch].mean(axis=0)
    std = np.maximum(features[:batch].std(axis=0), 1e-8)
    model = classifier.SoftmaxModel(
        grid, rng.normal(0.0, 0.01, size=(3, features.shape[1] + 1)), mean, std, config
    )
    err = classifier.gradient_check(model, features[:batch], labels[:batch])
    return f"max_rel_err={io.fmt_real(err)} batch={batch}"


_HANDLERS = {
    "track": _cmd_track,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "perturb": _cmd_perturb,
    "heatmap": _cmd_heatmap,
    "filter": _cmd_filter,
    "sample-size": _cmd_sample_size,
    "sample": _cmd_sample,
    "histogram": _cmd_histogram,
    "simulate": _cmd_simulate,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "gradcheck": _cmd_gradcheck,
}


def dispatch(argv) -> int:
    """Parse argv, run the subcommand, and return the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    try:
        summary = _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except (ToolkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
