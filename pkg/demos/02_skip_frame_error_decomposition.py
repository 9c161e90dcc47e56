"""Decompose tracking-system error while skipping frames.

Runs the three evaluation combinations over a grid of skip
probabilities p (each frame is independently dropped with probability
p) and prints the mean MOTA per point:

  detection errors  - noisy boxes carrying true identities
  tracking errors   - true boxes, identities from the online tracker
  compound          - noisy boxes through the tracker

Skipping hurts the tracker most: surviving frames land further apart,
IOU association starts missing, and identities fragment.
"""

from pathlib import Path

from headtrack import io
from headtrack.experiments import ExperimentMode, format_experiments_csv, sweep, sweep_means
from headtrack.simulator import default_layout, simulate_sequence

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

layout = default_layout()
gt = simulate_sequence(5, layout, 300, seed=11)
info = layout.sequence_info(300)
p_grid = [i / 10 for i in range(10)]

means = {}
for mode in ExperimentMode:
    rows = sweep(mode, gt, p_grid, n_seeds=5, info=info, base_seed=42)
    means[mode] = sweep_means(rows)
    path = out_dir / f"demo2_sweep_{mode.value}.csv"
    path.write_text(format_experiments_csv(rows), encoding="ascii")
    print(f"wrote {path}")

header = "p     " + "".join(f"{mode.value:>18}" for mode in ExperimentMode)
print("\nmean MOTA over 5 seeds")
print(header)
for p in p_grid:
    row = f"{p:<6.1f}"
    for mode in ExperimentMode:
        row += f"{means[mode][p]['mota']:>18.3f}"
    print(row)

# Observations rather than assertions: the compound run carries the tracking
# errors plus detector noise, so it should not beat the tracking-only run;
# whether it beats the detection-only run depends on the detector error
# profile (the tracker smooths jitter, the id-inheritance mode does not).
worse_than_tracking = all(
    means[ExperimentMode.COMPOUND][p]["mota"] <= means[ExperimentMode.TRACKING_ERRORS][p]["mota"]
    for p in p_grid
)
print(f"\ncompound <= tracking at every p: {worse_than_tracking}")
anomaly_points = [
    p for p in p_grid
    if means[ExperimentMode.COMPOUND][p]["mota"] > means[ExperimentMode.DETECTION_ERRORS][p]["mota"]
]
if anomaly_points:
    print(
        "observation: compound outperforms detection-only at p in "
        f"{anomaly_points} - the tracker's motion model papers over detector noise"
    )
