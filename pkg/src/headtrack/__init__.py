"""Tracking-by-detection toolkit for overhead head-tracking analytics.

Pipeline stages: SORT-style online tracking, CLEAR-MOT evaluation,
skip-frame error-decomposition experiments, trajectory heatmaps, track
filtering and statistical sampling, and a softmax classifier that tells
customers, staff, and erroneous tracks apart by movement pattern.
"""

from .classifier import (
    SoftmaxModel,
    TrainConfig,
    gradient_check,
    pool_heatmap,
    predict,
    train,
)
from .errors import (
    DegenerateDataError,
    DimensionMismatchError,
    EmptyGroundTruthError,
    FormatError,
    InvariantError,
    MissingIdError,
    NumericError,
    OutOfOrderFrameError,
    SampleTooLargeError,
    ToolkitError,
)
from .evaluation import MotaReport, MotCounts, evaluate
from .experiments import (
    ExperimentMode,
    PerturbParams,
    assign_gt_ids,
    perturb_detections,
    run_mode,
    skip_frames,
    sweep,
)
from .heatmap import (
    FilterParams,
    Heatmap,
    SampleSpec,
    filter_tracks,
    hourly_histogram,
    rasterize_all,
    rasterize_track,
    sample_size,
    sample_tracks,
)
from .model import (
    BoundingBox,
    ClassLabel,
    Detection,
    SequenceInfo,
    Track,
    TrackedBox,
    center,
    group_tracks,
    iou,
    path_length,
)
from .simulator import (
    BehaviorProfile,
    StoreLayout,
    default_layout,
    default_profiles,
    simulate_population,
    simulate_sequence,
    simulate_track,
)
from .tracker import SortTracker, TrackerParams, associate, run, solve_assignment

__version__ = "0.1.0"
