"""IoU-controlled distortion of ground-truth boxes by translation along random directions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BoundingBox, WordSample, iou

IOU_TOLERANCE = 0.005
_MAX_BISECT_ITERATIONS = 60

DEFAULT_LEVELS = tuple(round(i / 100, 2) for i in range(1, 101))


@dataclass(frozen=True)
class DistortionSpec:
    """Target IoU levels and the seed that makes the sweep reproducible."""

    seed: int
    levels: tuple[float, ...] = DEFAULT_LEVELS

    def __post_init__(self):
        if not self.levels:
            raise ValueError("no distortion levels")
        for prev, cur in zip((0.0,) + tuple(self.levels), self.levels):
            if not prev < cur <= 1.0:
                raise ValueError("levels must be strictly increasing and within (0, 1]")


@dataclass
class DistortedDatabase:
    """One distorted copy of the retrieval database at a single IoU level."""

    level: float
    boxes: dict[int, BoundingBox]
    achieved_iou: dict[int, float] = field(repr=False)


def translated_iou(box: BoundingBox, dx: float, dy: float) -> float:
    """IoU between a box and its copy translated by a real-valued offset."""
    w, h = box.width, box.height
    wi = w - abs(dx)
    hi = h - abs(dy)
    if wi <= 0 or hi <= 0:
        return 0.0
    inter = wi * hi
    return inter / (2.0 * w * h - inter)


def displacement_for_iou(box: BoundingBox, direction: float, target: float) -> float:
    """Translation length along `direction` (radians) that hits the target IoU.

    IoU is monotone non-increasing in the translation length, so bisection on
    [0, smallest zero-overlap length] converges; the result is within 1e-3 of
    the target (much closer in practice).
    """
    if not 0.0 < target <= 1.0:
        raise ValueError(f"target IoU must be in (0, 1], got {target}")
    if target == 1.0:
        return 0.0
    c, s = math.cos(direction), math.sin(direction)
    t_zero = min(box.width / abs(c) if abs(c) > 1e-12 else math.inf,
                 box.height / abs(s) if abs(s) > 1e-12 else math.inf)
    lo, hi = 0.0, t_zero
    mid = 0.5 * t_zero
    for _ in range(_MAX_BISECT_ITERATIONS):
        mid = 0.5 * (lo + hi)
        val = translated_iou(box, mid * c, mid * s)
        if abs(val - target) <= 1e-12:
            break
        if val > target:
            lo = mid
        else:
            hi = mid
    return mid


def _candidate(box, sx, sy, ix, iy, target):
    moved = box.translated(sx * ix, sy * iy)
    return abs(iou(box, moved) - target), moved


def _grid_refine(box, sx, sy, ax, ay, target):
    """Best integer translation when the four rounding corners miss the tolerance.

    Sweeps every vertical shift that keeps some overlap and solves the matching
    horizontal shift, so the returned translation is the closest the integer
    grid can get; candidates near the sampled continuous offset win ties.
    """
    w, h = box.width, box.height
    area_target = 2.0 * w * h * target / (1.0 + target)
    best = None
    for iy in range(0, h):
        remaining = h - iy
        ix_cont = w - area_target / remaining
        for ix in {math.floor(ix_cont), math.ceil(ix_cont)}:
            ix = min(max(ix, 0), w - 1)
            err, moved = _candidate(box, sx, sy, ix, iy, target)
            ray_dist = (ix - ax) ** 2 + (iy - ay) ** 2
            key = (err, ray_dist, iy, ix)
            if best is None or key < best[0]:
                best = (key, moved)
    return best[1]


def distort_box(box: BoundingBox, target: float, rng: np.random.Generator) -> BoundingBox:
    """Translate the box along a random direction to hit the target IoU.

    The continuous solution is rounded to integer pixels; when rounding pushes
    the achieved IoU outside the +/-0.005 tolerance the translation is refined
    against the integer grid. The result may extend beyond the page; crop()
    pads such regions white.
    """
    if not 0.0 < target <= 1.0:
        raise ValueError(f"target IoU must be in (0, 1], got {target}")
    direction = rng.uniform(0.0, 2.0 * math.pi)
    t = displacement_for_iou(box, direction, target)
    dx = t * math.cos(direction)
    dy = t * math.sin(direction)
    sx = 1 if dx >= 0 else -1
    sy = 1 if dy >= 0 else -1
    ax, ay = abs(dx), abs(dy)
    best_err, best_box = math.inf, box
    for ix in {math.floor(ax), math.ceil(ax)}:
        for iy in {math.floor(ay), math.ceil(ay)}:
            err, moved = _candidate(box, sx, sy, ix, iy, target)
            if err < best_err:
                best_err, best_box = err, moved
    if best_err <= IOU_TOLERANCE:
        return best_box
    return _grid_refine(box, sx, sy, ax, ay, target)


def _sample_rng(seed: int, level: float, sample_id: int) -> np.random.Generator:
    # independent stream per (seed, level, sample): generation order never matters
    level_key = int(round(level * 10 ** 6))
    return np.random.default_rng(np.random.SeedSequence((seed & 0xFFFFFFFFFFFFFFFF,
                                                         level_key, sample_id)))


def generate_distorted_databases(samples: list[WordSample],
                                 spec: DistortionSpec) -> list[DistortedDatabase]:
    """One distorted database per level; level 1.0 reproduces the ground truth."""
    if not samples:
        raise ValueError("cannot distort an empty test set")
    databases = []
    for level in spec.levels:
        databases.append(generate_distorted_database(samples, level, spec.seed))
    return databases


def generate_distorted_database(samples: list[WordSample], level: float,
                                seed: int) -> DistortedDatabase:
    if not samples:
        raise ValueError("cannot distort an empty test set")
    boxes = {}
    achieved = {}
    for s in samples:
        rng = _sample_rng(seed, level, s.sample_id)
        moved = distort_box(s.box, level, rng)
        boxes[s.sample_id] = moved
        achieved[s.sample_id] = iou(s.box, moved)
    return DistortedDatabase(level=level, boxes=boxes, achieved_iou=achieved)
