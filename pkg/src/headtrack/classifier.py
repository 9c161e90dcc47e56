"""Pooled-heatmap features and a multinomial logistic-regression classifier.

Variable-length tracks become fixed-size vectors by summing their
exposure heatmap over a G x G grid of near-equal regions and taking
log(1 + sum) per region. A linear softmax model over these features
separates the three movement archetypes (aisle browsing, cashier-desk
dwelling, stationary bright-circle errors); training is full-batch
gradient descent on the convex L2-penalized cross-entropy, so results
are deterministic given data, seed, and hyperparameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateDataError,
    DimensionMismatchError,
    FormatError,
    InvariantError,
)
from .heatmap import Heatmap, rasterize_track
from .model import ClassLabel, SequenceInfo, Track

__all__ = [
    "TrainConfig",
    "SoftmaxModel",
    "TrainResult",
    "pool_heatmap",
    "features_for_tracks",
    "train",
    "predict",
    "predict_batch",
    "gradient_check",
    "save_model",
    "load_model",
    "save_features",
    "load_features",
    "accuracy_report_csv",
]

_N_CLASSES = 3
_STD_FLOOR = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    iterations: int = 500
    l2: float = 1e-4
    split: tuple[float, float, float] = (0.6, 0.2, 0.2)

    def __post_init__(self):
        if self.learning_rate <= 0 or self.iterations < 1 or self.l2 < 0:
            raise InvariantError("bad hyperparameters")
        if len(self.split) != 3 or min(self.split) <= 0 or abs(sum(self.split) - 1.0) > 1e-9:
            raise InvariantError(f"split must be three positive fractions summing to 1, got {self.split}")


@dataclass(frozen=True)
class SoftmaxModel:
    """Label weights (bias first) plus the training-set standardization."""

    grid_size: int
    weights: np.ndarray  # (3, D + 1), rows are labels 0, 1, 2
    feature_mean: np.ndarray  # (D,)
    feature_std: np.ndarray  # (D,), floored at 1e-8
    config: TrainConfig

    @property
    def n_features(self) -> int:
        return self.weights.shape[1] - 1


@dataclass(frozen=True)
class TrainResult:
    model: SoftmaxModel
    accuracies: dict[str, tuple[float, int]]  # split -> (accuracy, n)
    loss_history: tuple[float, ...]


def pool_heatmap(grid: Heatmap, pool_grid: int = 64) -> np.ndarray:
    """Pool a heatmap to pool_grid^2 features: log(1 + region sum), row-major.

    The frame splits into pool_grid near-equal rectangles per axis; the
    edge cells absorb the division remainders.
    """
    if pool_grid < 1:
        raise InvariantError(f"pool grid must be >= 1, got {pool_grid}")
    if grid.width >= pool_grid and grid.height >= pool_grid:
        col_blocks = np.add.reduceat(grid.cells, np.arange(pool_grid) * (grid.width // pool_grid), axis=1)
        sums = np.add.reduceat(col_blocks, np.arange(pool_grid) * (grid.height // pool_grid), axis=0)
    else:
        # Degenerate frames smaller than the grid: zero-width leading cells.
        sums = np.zeros((pool_grid, pool_grid), dtype=np.int64)
        base_w = grid.width // pool_grid
        base_h = grid.height // pool_grid
        for gy in range(pool_grid):
            y0 = gy * base_h
            y1 = (gy + 1) * base_h if gy < pool_grid - 1 else grid.height
            for gx in range(pool_grid):
                x0 = gx * base_w
                x1 = (gx + 1) * base_w if gx < pool_grid - 1 else grid.width
                sums[gy, gx] = grid.cells[y0:y1, x0:x1].sum()
    return np.log1p(sums.astype(float)).ravel()


def features_for_tracks(
    tracks: Sequence[Track],
    info: SequenceInfo,
    pool_grid: int = 64,
    radius_rule: str = "mean-half-extent",
) -> tuple[np.ndarray, np.ndarray]:
    """Rasterize and pool each track; returns (track_ids, feature matrix)."""
    ids = np.array([t.track_id for t in tracks], dtype=np.int64)
    rows = [pool_heatmap(rasterize_track(t, info, radius_rule), pool_grid) for t in tracks]
    features = np.vstack(rows) if rows else np.zeros((0, pool_grid * pool_grid))
    return ids, features


def _stratified_split(
    labels: np.ndarray, split: tuple[float, float, float], seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    parts: list[list[int]] = [[], [], []]
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        idx = idx[rng.permutation(len(idx))]
        n = len(idx)
        n_train = int(round(split[0] * n))
        n_val = int(round(split[1] * n))
        n_train = min(n_train, n)
        n_val = min(n_val, n - n_train)
        chunks = (idx[:n_train], idx[n_train : n_train + n_val], idx[n_train + n_val :])
        for part, chunk in zip(parts, chunks):
            if len(chunk) == 0:
                raise DegenerateDataError(
                    f"class {int(cls)} has an empty split stratum (n={n}, split={split})"
                )
            part.extend(chunk.tolist())
    return tuple(np.sort(np.array(part, dtype=np.int64)) for part in parts)  # type: ignore[return-value]


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _loss_and_gradient(
    weights: np.ndarray, x_aug: np.ndarray, y_onehot: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    probs = _softmax_rows(x_aug @ weights.T)
    n = x_aug.shape[0]
    ce = -np.log(np.clip((probs * y_onehot).sum(axis=1), 1e-300, None)).mean()
    penalty_w = weights.copy()
    penalty_w[:, 0] = 0.0  # bias is unpenalized
    loss = ce + 0.5 * l2 * float((penalty_w**2).sum())
    grad = (probs - y_onehot).T @ x_aug / n + l2 * penalty_w
    return float(loss), grad


def _standardize(x: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return (x - mean) / std


def _augment(x: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((x.shape[0], 1)), x])


def train(
    features: np.ndarray,
    labels: Sequence[int],
    split_seed: int = 0,
    config: TrainConfig = TrainConfig(),
) -> TrainResult:
    """Fit the softmax model on a stratified train/val/test split.

    Features standardize with training-set statistics only; weights start
    at zero and take config.iterations full-batch gradient steps.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray([int(v) for v in labels], dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"features {x.shape} do not match {y.shape[0]} labels")
    if not np.all(np.isfinite(x)):
        raise InvariantError("features contain non-finite values")
    if x.shape[0] < 10:
        raise DegenerateDataError(f"need at least 10 samples, got {x.shape[0]}")
    if len(np.unique(y)) < 2:
        raise DegenerateDataError("need at least 2 distinct labels")
    if y.min() < 0 or y.max() >= _N_CLASSES:
        raise InvariantError("labels must be in {0, 1, 2}")
    grid_size = int(round(np.sqrt(x.shape[1])))
    if grid_size * grid_size != x.shape[1]:
        raise DimensionMismatchError(f"feature dimension {x.shape[1]} is not a square grid")

    train_idx, val_idx, test_idx = _stratified_split(y, config.split, split_seed)
    mean = x[train_idx].mean(axis=0)
    std = np.maximum(x[train_idx].std(axis=0), _STD_FLOOR)

    x_train = _augment(_standardize(x[train_idx], mean, std))
    y_onehot = np.zeros((len(train_idx), _N_CLASSES))
    y_onehot[np.arange(len(train_idx)), y[train_idx]] = 1.0

    weights = np.zeros((_N_CLASSES, x.shape[1] + 1))
    losses = []
    for _ in range(config.iterations):
        loss, grad = _loss_and_gradient(weights, x_train, y_onehot, config.l2)
        losses.append(loss)
        weights = weights - config.learning_rate * grad

    model = SoftmaxModel(grid_size, weights, mean, std, config)
    accuracies = {}
    for name, idx in (("train", train_idx), ("val", val_idx), ("test", test_idx)):
        predicted, _ = predict_batch(model, x[idx])
        accuracies[name] = (float((predicted == y[idx]).mean()), int(len(idx)))
    return TrainResult(model, accuracies, tuple(losses))


def predict_batch(model: SoftmaxModel, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Predicted labels and class probabilities for a feature matrix."""
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.n_features:
        raise DimensionMismatchError(
            f"feature dimension {x.shape[1]} does not match model ({model.n_features})"
        )
    logits = _augment(_standardize(x, model.feature_mean, model.feature_std)) @ model.weights.T
    probs = _softmax_rows(logits)
    return probs.argmax(axis=1), probs


def predict(model: SoftmaxModel, feature: np.ndarray) -> tuple[ClassLabel, np.ndarray]:
    """Label and probability simplex for one feature vector.

    Ties break toward the lowest label value (argmax first occurrence).
    """
    labels, probs = predict_batch(model, np.asarray(feature, dtype=float)[None, :])
    return ClassLabel(int(labels[0])), probs[0]


def gradient_check(
    model: SoftmaxModel,
    features: np.ndarray,
    labels: Sequence[int],
    step: float = 1e-5,
) -> float:
    """Max relative error between the analytic gradient and central differences.

    Intended for small batches (at most 50 samples); uses the model's
    standardization and L2 setting at its current weights. The check is
    only meaningful away from softmax saturation: with standardization
    statistics foreign to the batch, logits can overflow the plateau
    where finite differences go flat.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray([int(v) for v in labels], dtype=np.int64)
    if x.shape[0] > 50:
        raise InvariantError(f"gradient check expects <= 50 samples, got {x.shape[0]}")
    x_aug = _augment(_standardize(x, model.feature_mean, model.feature_std))
    y_onehot = np.zeros((x.shape[0], _N_CLASSES))
    y_onehot[np.arange(x.shape[0]), y] = 1.0

    _, analytic = _loss_and_gradient(model.weights, x_aug, y_onehot, model.config.l2)
    worst = 0.0
    weights = model.weights.copy()
    for i in range(weights.shape[0]):
        for j in range(weights.shape[1]):
            original = weights[i, j]
            weights[i, j] = original + step
            loss_hi, _ = _loss_and_gradient(weights, x_aug, y_onehot, model.config.l2)
            weights[i, j] = original - step
            loss_lo, _ = _loss_and_gradient(weights, x_aug, y_onehot, model.config.l2)
            weights[i, j] = original
            numeric = (loss_hi - loss_lo) / (2.0 * step)
            denom = max(abs(analytic[i, j]) + abs(numeric), 1e-6)
            worst = max(worst, abs(analytic[i, j] - numeric) / denom)
    return worst


def accuracy_report_csv(accuracies: dict[str, tuple[float, int]]) -> str:
    """Render split accuracies as "split,accuracy,n" CSV."""
    lines = ["split,accuracy,n"]
    for name in ("train", "val", "test"):
        if name in accuracies:
            acc, n = accuracies[name]
            lines.append(f"{name},{'%.6g' % acc},{n}")
    return "".join(line + "\n" for line in lines)


def _fmt9(values: np.ndarray) -> str:
    return " ".join("%.9g" % v for v in values)


def save_model(model: SoftmaxModel, path) -> None:
    """Write the model as plain text with 9-significant-digit reals."""
    cfg = model.config
    lines = [
        f"softmax G={model.grid_size} classes={_N_CLASSES}",
        f"hyper lr={'%.9g' % cfg.learning_rate} iters={cfg.iterations} l2={'%.9g' % cfg.l2}",
        "mean " + _fmt9(model.feature_mean),
        "std " + _fmt9(model.feature_std),
    ]
    for k in range(_N_CLASSES):
        lines.append(f"w{k} " + _fmt9(model.weights[k]))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="ascii")


def load_model(path) -> SoftmaxModel:
    """Read a model file written by save_model."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if len(lines) < 4 + _N_CLASSES:
        raise FormatError("model file is truncated", line=len(lines))
    header = lines[0].split()
    if len(header) != 3 or header[0] != "softmax":
        raise FormatError(f"bad model header {lines[0]!r}", line=1)
    grid_size = int(header[1].removeprefix("G="))
    hyper = dict(part.split("=") for part in lines[1].split()[1:])
    config = TrainConfig(
        learning_rate=float(hyper["lr"]), iterations=int(hyper["iters"]), l2=float(hyper["l2"])
    )

    def _vector(line: str, tag: str, lineno: int) -> np.ndarray:
        parts = line.split()
        if parts[0] != tag:
            raise FormatError(f"expected {tag!r} row, got {parts[0]!r}", line=lineno)
        return np.array([float(v) for v in parts[1:]])

    mean = _vector(lines[2], "mean", 3)
    std = _vector(lines[3], "std", 4)
    weights = np.vstack(
        [_vector(lines[4 + k], f"w{k}", 5 + k) for k in range(_N_CLASSES)]
    )
    if weights.shape[1] != grid_size * grid_size + 1:
        raise FormatError("weight rows do not match the declared grid size")
    return SoftmaxModel(grid_size, weights, mean, std, config)


def save_features(track_ids: np.ndarray, features: np.ndarray, path) -> None:
    """Write features as CSV: header "track_id,f0,...", 9-significant-digit reals."""
    n_features = features.shape[1]
    lines = ["track_id," + ",".join(f"f{i}" for i in range(n_features))]
    for track_id, row in zip(track_ids, features):
        lines.append(str(int(track_id)) + "," + ",".join("%.9g" % v for v in row))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="ascii")


def load_features(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a features CSV written by save_features."""
    lines = [line for line in Path(path).read_text(encoding="ascii").splitlines() if line]
    if not lines or not lines[0].startswith("track_id,"):
        raise FormatError('features file must start with a "track_id,f0,..." header', line=1)
    n_features = len(lines[0].split(",")) - 1
    ids = []
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != n_features + 1:
            raise FormatError(f"expected {n_features + 1} fields, got {len(parts)}", line=lineno)
        ids.append(int(parts[0]))
        rows.append([float(v) for v in parts[1:]])
    return np.array(ids, dtype=np.int64), np.array(rows, dtype=float)
