"""Synthetic retail-floor ground truth for tracker and classifier tests.

Three movement archetypes are generated: customers browse the aisles in
random order and finish at the cashier desk, staff dwell behind the
cashier desk with brief excursions, and erroneous "tracks" sit still
like a detector latching onto a head-shaped object. Agents follow
waypoints at constant speed; emitted box centers add per-frame Gaussian
observation noise. Everything is deterministic per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, InvariantError
from .model import BoundingBox, ClassLabel, SequenceInfo, Track, TrackedBox
from .seeding import derive_seed

__all__ = [
    "StoreLayout",
    "BehaviorProfile",
    "default_layout",
    "default_profiles",
    "load_layout",
    "simulate_track",
    "simulate_population",
    "simulate_sequence",
]

_REGION_PAD = 4.0


@dataclass(frozen=True)
class StoreLayout:
    """Static floor geometry: frame size/rate, cashier desk, aisles, entrance."""

    frame_width: int
    frame_height: int
    frame_rate: float
    cashier_region: BoundingBox
    aisle_regions: tuple[BoundingBox, ...]
    entrance: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "aisle_regions", tuple(self.aisle_regions))
        if self.frame_width < 1 or self.frame_height < 1 or self.frame_rate <= 0:
            raise InvariantError("frame size and rate must be positive")
        if not self.aisle_regions:
            raise InvariantError("layout needs at least one aisle region")
        for region in (self.cashier_region, *self.aisle_regions):
            if (
                region.x_left < 0
                or region.y_top < 0
                or region.x_right > self.frame_width
                or region.y_bottom > self.frame_height
            ):
                raise InvariantError(f"region {region} exceeds the frame bounds")
        ex, ey = self.entrance
        if not (0 <= ex <= self.frame_width and 0 <= ey <= self.frame_height):
            raise InvariantError(f"entrance {self.entrance} is outside the frame")

    def sequence_info(self, frame_count: int) -> SequenceInfo:
        return SequenceInfo(self.frame_width, self.frame_height, frame_count, self.frame_rate)


@dataclass(frozen=True)
class BehaviorProfile:
    """Per-class movement parameters."""

    label: ClassLabel
    speed: float  # px/frame toward the current waypoint
    dwell_mean: float  # mean frames spent per visited region
    head_mean: float = 40.0  # head box edge length, mean and std
    head_std: float = 3.0
    noise_std: float = 1.0  # per-frame observation noise on the center
    wander_std: float = 2.5  # per-frame drift while dwelling in a region
    jitter_std: float = 1e-3  # stationary-class center jitter (sub-pixel)
    region_weights: tuple[float, ...] | None = None  # aisle re-visit weights

    def __post_init__(self):
        if self.speed < 0 or self.head_mean <= 0:
            raise InvariantError("speed must be >= 0 and head size positive")


def default_layout() -> StoreLayout:
    """A 1280x720 floor: top-center cashier desk, four vertical aisles."""
    return StoreLayout(
        frame_width=1280,
        frame_height=720,
        frame_rate=25.0,
        cashier_region=BoundingBox(400, 0, 480, 320),
        aisle_regions=(
            BoundingBox(160, 300, 120, 400),
            BoundingBox(480, 340, 120, 360),
            BoundingBox(800, 340, 120, 360),
            BoundingBox(1120, 300, 120, 400),
        ),
        entrance=(640.0, 700.0),
    )


def default_profiles() -> dict[ClassLabel, BehaviorProfile]:
    return {
        ClassLabel.CUSTOMER: BehaviorProfile(ClassLabel.CUSTOMER, speed=3.0, dwell_mean=60.0),
        ClassLabel.STAFF: BehaviorProfile(ClassLabel.STAFF, speed=3.0, dwell_mean=2000.0),
        ClassLabel.ERROR: BehaviorProfile(ClassLabel.ERROR, speed=0.0, dwell_mean=0.0),
    }


def load_layout(path) -> StoreLayout:
    """Parse a plain-text layout file.

    Lines are "key = value" with keys frame_width, frame_height,
    frame_rate, entrance = x,y, cashier = x,y,w,h, and one or more
    aisle = x,y,w,h lines. Blank lines and '#' comments are skipped.
    """
    values: dict[str, str] = {}
    aisles: list[BoundingBox] = []
    cashier: BoundingBox | None = None
    for lineno, raw in enumerate(Path(path).read_text(encoding="ascii").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"expected 'key = value', got {line!r}", line=lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in ("cashier", "aisle"):
            parts = [float(v) for v in value.split(",")]
            if len(parts) != 4:
                raise FormatError(f"{key} needs x,y,w,h", line=lineno)
            region = BoundingBox(*parts)
            if key == "cashier":
                cashier = region
            else:
                aisles.append(region)
        elif key in ("frame_width", "frame_height", "frame_rate", "entrance"):
            values[key] = value
        else:
            raise FormatError(f"unknown layout key {key!r}", line=lineno)
    missing = {"frame_width", "frame_height", "frame_rate", "entrance"} - set(values)
    if missing or cashier is None or not aisles:
        raise FormatError(f"layout file incomplete (missing {sorted(missing)} / cashier / aisle)")
    ex, ey = (float(v) for v in values["entrance"].split(","))
    return StoreLayout(
        frame_width=int(values["frame_width"]),
        frame_height=int(values["frame_height"]),
        frame_rate=float(values["frame_rate"]),
        cashier_region=cashier,
        aisle_regions=tuple(aisles),
        entrance=(ex, ey),
    )


def _region_center(region: BoundingBox) -> np.ndarray:
    return np.array([region.x_left + region.width / 2.0, region.y_top + region.height / 2.0])


def _uniform_in_region(region: BoundingBox, rng: np.random.Generator) -> np.ndarray:
    return np.array(
        [
            rng.uniform(region.x_left + _REGION_PAD, region.x_right - _REGION_PAD),
            rng.uniform(region.y_top + _REGION_PAD, region.y_bottom - _REGION_PAD),
        ]
    )


def _walk(pos: np.ndarray, target: np.ndarray, speed: float, budget: int) -> np.ndarray:
    """Straight-line positions from pos toward target at constant speed.

    Stops on arrival or when the frame budget runs out, whichever is first.
    """
    dist = float(np.hypot(*(target - pos)))
    if dist == 0.0 or speed <= 0.0 or budget <= 0:
        return np.zeros((0, 2))
    steps = min(int(math.ceil(dist / speed)), budget)
    advance = np.minimum(np.arange(1, steps + 1) * speed, dist)
    return pos + (target - pos) / dist * advance[:, None]


def _dwell(
    pos: np.ndarray, region: BoundingBox, frames: int, wander_std: float, rng: np.random.Generator
) -> np.ndarray:
    """Slow drift inside a region for a number of frames."""
    if frames <= 0:
        return np.zeros((0, 2))
    drift = np.cumsum(rng.normal(0.0, wander_std, size=(frames, 2)), axis=0)
    positions = pos + drift
    positions[:, 0] = np.clip(positions[:, 0], region.x_left + _REGION_PAD, region.x_right - _REGION_PAD)
    positions[:, 1] = np.clip(positions[:, 1], region.y_top + _REGION_PAD, region.y_bottom - _REGION_PAD)
    return positions


def _queue_region(layout: StoreLayout) -> BoundingBox:
    """Small waiting area just below the cashier desk, clipped to the frame."""
    desk = layout.cashier_region
    depth = min(60.0, layout.frame_height - desk.y_bottom)
    if depth < 2 * _REGION_PAD + 1:
        return desk
    return BoundingBox(desk.x_left, desk.y_bottom, desk.width, depth)


def _customer_positions(
    profile: BehaviorProfile, layout: StoreLayout, duration: int, rng: np.random.Generator
) -> np.ndarray:
    aisles = layout.aisle_regions
    weights = None
    if profile.region_weights is not None:
        weights = np.asarray(profile.region_weights, dtype=float)
        weights = weights / weights.sum()
    queue = _queue_region(layout)
    chunks: list[np.ndarray] = []
    pos = np.array(layout.entrance, dtype=float)
    produced = 0

    def emit(chunk: np.ndarray) -> np.ndarray:
        nonlocal pos, produced
        if len(chunk) > duration - produced:
            chunk = chunk[: duration - produced]
        if len(chunk):
            chunks.append(chunk)
            produced += len(chunk)
            pos = chunk[-1].copy()
        return chunk

    while produced < duration:
        order = rng.permutation(len(aisles))
        for index in order:
            aisle = aisles[index]
            if weights is not None:
                index = int(rng.choice(len(aisles), p=weights))
                aisle = aisles[index]
            bottom = np.array([_region_center(aisle)[0], aisle.y_bottom - _REGION_PAD])
            top = np.array([_region_center(aisle)[0], aisle.y_top + _REGION_PAD])
            emit(_walk(pos, bottom, profile.speed, duration - produced))
            emit(_walk(pos, top, profile.speed, duration - produced))
            dwell_frames = max(1, int(rng.normal(profile.dwell_mean, profile.dwell_mean / 4.0)))
            emit(_dwell(pos, aisle, min(dwell_frames, duration - produced), profile.wander_std, rng))
            if produced >= duration:
                break
        if produced >= duration:
            break
        checkout = _uniform_in_region(queue, rng)
        emit(_walk(pos, checkout, profile.speed, duration - produced))
        dwell_frames = max(1, int(rng.normal(profile.dwell_mean, profile.dwell_mean / 4.0)))
        emit(_dwell(pos, queue, min(dwell_frames, duration - produced), profile.wander_std, rng))
        emit(_walk(pos, np.array(layout.entrance), profile.speed, duration - produced))
    return np.vstack(chunks)[:duration]


def _staff_positions(
    profile: BehaviorProfile, layout: StoreLayout, duration: int, rng: np.random.Generator
) -> np.ndarray:
    desk = layout.cashier_region
    home = _uniform_in_region(desk, rng)
    chunks: list[np.ndarray] = []
    pos = home.copy()
    produced = 0
    # Dwell lengths are floored at 70% of the mean so desk time dominates
    # even when every excursion crosses the whole floor.
    while produced < duration:
        dwell_frames = max(
            int(0.7 * profile.dwell_mean),
            int(rng.normal(profile.dwell_mean, 0.15 * profile.dwell_mean)),
        )
        chunk = _dwell(pos, desk, min(dwell_frames, duration - produced), profile.wander_std, rng)
        if len(chunk):
            chunks.append(chunk)
            produced += len(chunk)
            pos = chunk[-1].copy()
        if produced >= duration:
            break
        aisle = layout.aisle_regions[int(rng.integers(len(layout.aisle_regions)))]
        errand = _uniform_in_region(aisle, rng)
        for target in (errand,):
            chunk = _walk(pos, target, profile.speed, duration - produced)
            if len(chunk):
                chunks.append(chunk)
                produced += len(chunk)
                pos = chunk[-1].copy()
        chunk = _dwell(pos, aisle, min(30, duration - produced), profile.wander_std, rng)
        if len(chunk):
            chunks.append(chunk)
            produced += len(chunk)
            pos = chunk[-1].copy()
        chunk = _walk(pos, home, profile.speed, duration - produced)
        if len(chunk):
            chunks.append(chunk)
            produced += len(chunk)
            pos = chunk[-1].copy()
    return np.vstack(chunks)[:duration]


def _error_positions(
    profile: BehaviorProfile, layout: StoreLayout, duration: int, rng: np.random.Generator
) -> np.ndarray:
    margin = profile.head_mean
    anchor = np.array(
        [
            rng.uniform(margin, layout.frame_width - margin),
            rng.uniform(margin, layout.frame_height - margin),
        ]
    )
    return anchor + rng.normal(0.0, profile.jitter_std, size=(duration, 2))


def _head_size(profile: BehaviorProfile, rng: np.random.Generator) -> tuple[float, float]:
    """Head box size, quantized to 1/8 px so frame-edge clamps stay exact."""
    head_w = np.clip(rng.normal(profile.head_mean, profile.head_std), 8.0, None)
    head_h = np.clip(rng.normal(profile.head_mean, profile.head_std), 8.0, None)
    return round(float(head_w) * 8.0) / 8.0, round(float(head_h) * 8.0) / 8.0


def _boxes_from_positions(
    positions: np.ndarray,
    head_w: float,
    head_h: float,
    noise_std: float,
    layout: StoreLayout,
    track_id: int,
    start_frame: int,
    rng: np.random.Generator,
) -> Track:
    centers = positions + rng.normal(0.0, noise_std, size=positions.shape)
    half_w, half_h = head_w / 2.0, head_h / 2.0
    centers[:, 0] = np.clip(centers[:, 0], half_w, layout.frame_width - half_w)
    centers[:, 1] = np.clip(centers[:, 1], half_h, layout.frame_height - half_h)
    points = tuple(
        TrackedBox(
            start_frame + t,
            track_id,
            BoundingBox(centers[t, 0] - half_w, centers[t, 1] - half_h, head_w, head_h),
        )
        for t in range(len(centers))
    )
    return Track(track_id, points)


def simulate_track(
    profile: BehaviorProfile,
    layout: StoreLayout,
    duration_frames: int,
    seed: int,
    track_id: int = 1,
    start_frame: int = 1,
) -> Track:
    """Generate one track of duration_frames boxes for the given behavior."""
    if duration_frames < 1:
        raise InvariantError(f"duration must be >= 1, got {duration_frames}")
    rng = np.random.default_rng(seed)
    head_w, head_h = _head_size(profile, rng)
    if profile.label is ClassLabel.ERROR:
        positions = _error_positions(profile, layout, duration_frames, rng)
        noise_std = 0.0  # jitter already applied; keep the signature stationary
    elif profile.label is ClassLabel.STAFF:
        positions = _staff_positions(profile, layout, duration_frames, rng)
        noise_std = profile.noise_std
    else:
        positions = _customer_positions(profile, layout, duration_frames, rng)
        noise_std = profile.noise_std
    return _boxes_from_positions(
        positions, head_w, head_h, noise_std, layout, track_id, start_frame, rng
    )


def simulate_population(
    n_customer: int,
    n_staff: int,
    n_error: int,
    layout: StoreLayout | None = None,
    seed: int = 42,
    walker_duration: tuple[int, int] = (2200, 3200),
    error_duration: tuple[int, int] = (300, 1200),
    profiles: dict[ClassLabel, BehaviorProfile] | None = None,
) -> tuple[list[Track], dict[int, ClassLabel]]:
    """Independent labeled tracks: customers, staff, then error tracks.

    Walker durations draw from walker_duration (inclusive), error tracks
    from error_duration: long mobile walkers, short stationary errors.
    Per-track seeds derive from the master seed, so populations are
    reproducible and individual tracks independent.
    """
    layout = layout or default_layout()
    profiles = profiles or default_profiles()
    duration_rng = np.random.default_rng(derive_seed(seed, 1))
    tracks: list[Track] = []
    labels: dict[int, ClassLabel] = {}
    plan = [
        (ClassLabel.CUSTOMER, n_customer, walker_duration),
        (ClassLabel.STAFF, n_staff, walker_duration),
        (ClassLabel.ERROR, n_error, error_duration),
    ]
    track_id = 1
    for label, count, (lo, hi) in plan:
        for _ in range(count):
            duration = int(duration_rng.integers(lo, hi + 1))
            tracks.append(
                simulate_track(
                    profiles[label],
                    layout,
                    duration,
                    derive_seed(seed, 1000 + track_id),
                    track_id=track_id,
                )
            )
            labels[track_id] = label
            track_id += 1
    return tracks, labels


def _lane_positions(
    lane_y: float, x0: float, direction: float, speed: float, lo: float, hi: float, n: int
) -> np.ndarray:
    """Constant-speed horizontal patrol bouncing between lo and hi."""
    period = 2.0 * (hi - lo)
    t = np.arange(1, n + 1)
    z = np.mod(x0 - lo + direction * speed * t, period)
    xs = lo + np.minimum(z, period - z)
    return np.column_stack([xs, np.full(n, lane_y)])


def _roam_positions(
    layout: StoreLayout, speed: float, margin: float, duration: int, rng: np.random.Generator
) -> np.ndarray:
    chunks: list[np.ndarray] = []
    pos = np.array(
        [
            rng.uniform(margin, layout.frame_width - margin),
            rng.uniform(margin, layout.frame_height - margin),
        ]
    )
    produced = 0
    while produced < duration:
        target = np.array(
            [
                rng.uniform(margin, layout.frame_width - margin),
                rng.uniform(margin, layout.frame_height - margin),
            ]
        )
        chunk = _walk(pos, target, speed, duration - produced)
        if len(chunk) == 0:  # degenerate draw on top of the current position
            chunk = pos[None, :].repeat(min(10, duration - produced), axis=0)
        chunks.append(chunk)
        produced += len(chunk)
        pos = chunk[-1].copy()
    return np.vstack(chunks)[:duration]


def simulate_sequence(
    n_agents: int,
    layout: StoreLayout | None = None,
    duration_frames: int = 300,
    seed: int = 42,
    separated: bool = False,
) -> list[Track]:
    """Ground-truth tracks sharing one timeline, with staggered entry/exit.

    Default agents roam freely, so paths may cross and exercise identity
    switches. With separated=True each agent patrols its own horizontal
    lane at constant velocity and agents never overlap spatially.
    """
    if n_agents < 1:
        raise InvariantError(f"n_agents must be >= 1, got {n_agents}")
    layout = layout or default_layout()
    profile = default_profiles()[ClassLabel.CUSTOMER]
    stagger = max(1, duration_frames // 5)
    tracks: list[Track] = []
    for agent in range(n_agents):
        rng = np.random.default_rng(derive_seed(seed, 2000 + agent))
        entry = int(rng.integers(0, stagger))
        exit_cut = int(rng.integers(0, stagger))
        lifetime = duration_frames - entry - exit_cut
        if lifetime < 1:
            lifetime = 1
        head_w, head_h = _head_size(profile, rng)
        margin = max(head_w, head_h)
        if separated:
            lane_y = (agent + 0.5) * layout.frame_height / n_agents
            x0 = rng.uniform(margin, layout.frame_width - margin)
            direction = 1.0 if rng.random() < 0.5 else -1.0
            positions = _lane_positions(
                lane_y, x0, direction, profile.speed, margin, layout.frame_width - margin, lifetime
            )
        else:
            positions = _roam_positions(layout, profile.speed, margin, lifetime, rng)
        tracks.append(
            _boxes_from_positions(
                positions,
                head_w,
                head_h,
                profile.noise_std,
                layout,
                agent + 1,
                1 + entry,
                rng,
            )
        )
    return tracks
