"""Turn tracks into exposure heatmaps, then filter and sample them.

Simulates a labeled population, renders one heatmap per behavior class
(16-bit PGM files you can open with any image viewer), and shows the
two analytics stages that precede labeling: length-based filtering,
which removes the stationary bright-circle error tracks, and
finite-population sampling, which says how many of the survivors need
manual annotation.
"""

from pathlib import Path

from headtrack import io
from headtrack.heatmap import (
    FilterParams,
    SampleSpec,
    filter_tracks,
    histogram_csv,
    hourly_histogram,
    rasterize_track,
    sample_size,
    sample_tracks,
)
from headtrack.model import ClassLabel, path_length
from headtrack.simulator import default_layout, simulate_population

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

layout = default_layout()
tracks, labels = simulate_population(30, 30, 30, layout, seed=14)
info = layout.sequence_info(max(t.last_frame for t in tracks))
print(f"population: {len(tracks)} tracks over a {info.frame_width}x{info.frame_height} frame")

# One heatmap per class archetype: customers paint the aisles, staff light
# up the cashier desk, error tracks collapse to a single bright circle.
for label in ClassLabel:
    track = next(t for t in tracks if labels[t.track_id] == label)
    grid = rasterize_track(track, info)
    path = out_dir / f"demo3_heatmap_{label.name.lower()}.pgm"
    io.write_pgm16(grid, path)
    print(
        f"  {label.name.lower():<8} track {track.track_id:>3}: "
        f"{len(track.points):>5} frames, path {path_length(track):8.1f} px -> {path.name}"
    )

# Filtering: keep tracks that are long in frames AND in distance covered.
kept = filter_tracks(tracks, FilterParams(), info)
kept_errors = sum(1 for t in kept if labels[t.track_id] == ClassLabel.ERROR)
print(
    f"\nfilter (>=2000 frames and >=2x frame width): kept {len(kept)}/{len(tracks)}, "
    f"error tracks among survivors: {kept_errors}"
)

# How many survivors would need manual labels at 95% confidence / 5% margin?
needed = sample_size(SampleSpec(population=len(kept)))
sampled = sample_tracks(kept, needed, seed=14)
io.write_mot_csv(sampled, out_dir / "demo3_sample.csv")
print(f"sample size for population {len(kept)}: {needed} -> demo3_sample.csv")
print(f"(for the classic inputs: population 920 needs {sample_size(SampleSpec(920))})")

# Store activity per hour of footage, counted in boxes.
boxes = [p for t in tracks for p in t.points]
counts = hourly_histogram(boxes, info)
(out_dir / "demo3_hourly.csv").write_text(histogram_csv(counts), encoding="ascii")
print(f"hourly histogram ({len(counts)} buckets) -> demo3_hourly.csv")
