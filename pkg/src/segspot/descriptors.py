"""Learning-free word image descriptors pooled over an ink-adaptive quad-tree grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import binarize

# Region rectangles are (left, top, right, bottom) in word-image pixels, half-open.
Region = tuple[int, int, int, int]

LBP_BINS = 59

METHODS = ("quadtree", "lbp", "hog")


@dataclass(frozen=True)
class DescriptorConfig:
    """Tunable descriptor parameters; the LBP operator itself is fixed at radius 1, 8 neighbors."""

    quadtree_levels: int = 2
    hog_bins: int = 9

    def region_count(self) -> int:
        return sum(4 ** i for i in range(1, self.quadtree_levels + 1))

    def dimension(self, method: str) -> int:
        if method == "quadtree":
            return self.region_count()
        if method == "lbp":
            return LBP_BINS * self.region_count()
        if method == "hog":
            return self.hog_bins * self.region_count()
        raise ValueError(f"unknown descriptor method {method!r}")


DEFAULT_CONFIG = DescriptorConfig()


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Fixed-length descriptor tagged with the method that produced it."""

    method: str
    values: np.ndarray

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


def _l2_normalized(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    return v / norm if norm > 0.0 else v


def geometric_centroid(binary: np.ndarray, region: Region) -> tuple[int, int]:
    """Rounded mean coordinate of the foreground pixels inside the region.

    An ink-free region answers its geometric center.
    """
    left, top, right, bottom = region
    ys, xs = np.nonzero(binary[top:bottom, left:right])
    if xs.size == 0:
        return ((left + right) // 2, (top + bottom) // 2)
    cx = left + int(math.floor(float(xs.mean()) + 0.5))
    cy = top + int(math.floor(float(ys.mean()) + 0.5))
    return (cx, cy)


def _split_point(binary, region) -> tuple[int, int]:
    left, top, right, bottom = region
    cx, cy = geometric_centroid(binary, region)
    # clamp so each side keeps at least one pixel; 1-wide/high regions collapse one side
    sx = min(max(cx, left + 1), right - 1) if right - left >= 2 else right
    sy = min(max(cy, top + 1), bottom - 1) if bottom - top >= 2 else bottom
    return (sx, sy)


def _quadrants(region, split) -> list[Region]:
    left, top, right, bottom = region
    sx, sy = split
    return [(left, top, sx, sy), (sx, top, right, sy),
            (left, sy, sx, bottom), (sx, sy, right, bottom)]


@dataclass(frozen=True)
class QuadTreeGrid:
    """Recursive 4-way zoning; splits[d] holds the split points of the depth-d regions."""

    splits: tuple[tuple[tuple[int, int], ...], ...]
    levels: tuple[tuple[Region, ...], ...]

    @property
    def regions(self) -> tuple[Region, ...]:
        flat = []
        for level in self.levels:
            flat.extend(level)
        return tuple(flat)


def quadtree_partition(binary: np.ndarray, levels: int = 2) -> QuadTreeGrid:
    """Split at the foreground centroid, then split each quadrant at its own centroid."""
    h, w = binary.shape
    if h < 2 or w < 2:
        raise ValueError(f"image {w}x{h} too small to partition")
    current: list[Region] = [(0, 0, w, h)]
    all_splits = []
    all_levels = []
    for _ in range(levels):
        splits = [_split_point(binary, r) for r in current]
        nxt = []
        for region, split in zip(current, splits):
            nxt.extend(_quadrants(region, split))
        all_splits.append(tuple(splits))
        all_levels.append(tuple(nxt))
        current = nxt
    return QuadTreeGrid(splits=tuple(all_splits), levels=tuple(all_levels))


def quadtree_descriptor(binary: np.ndarray,
                        config: DescriptorConfig = DEFAULT_CONFIG) -> FeatureVector:
    """Foreground-pixel fraction per quad-tree region, L2 normalized."""
    grid = quadtree_partition(binary, config.quadtree_levels)
    total = int(binary.sum())
    fractions = np.zeros(len(grid.regions))
    if total > 0:
        for i, (left, top, right, bottom) in enumerate(grid.regions):
            fractions[i] = int(binary[top:bottom, left:right].sum()) / total
    return FeatureVector("quadtree", _l2_normalized(fractions))


# 8 neighbors of radius 1, clockwise from the top-left corner.
_NEIGHBOR_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def _build_uniform_table() -> np.ndarray:
    table = np.full(256, LBP_BINS - 1, dtype=np.int64)
    next_bin = 0
    for code in range(256):
        bits = [(code >> k) & 1 for k in range(8)]
        transitions = sum(bits[k] != bits[(k + 1) % 8] for k in range(8))
        if transitions <= 2:
            table[code] = next_bin
            next_bin += 1
    assert next_bin == LBP_BINS - 1
    return table


_UNIFORM_TABLE = _build_uniform_table()


def lbp_codes(gray: np.ndarray) -> np.ndarray:
    """8-bit LBP code per interior pixel; bit k set when neighbor k >= center."""
    h, w = gray.shape
    if h < 3 or w < 3:
        raise ValueError(f"image {w}x{h} too small for LBP codes")
    center = gray[1:-1, 1:-1]
    codes = np.zeros((h - 2, w - 2), dtype=np.int64)
    for bit, (dy, dx) in enumerate(_NEIGHBOR_OFFSETS):
        neighbor = gray[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
        codes |= (neighbor >= center).astype(np.int64) << bit
    return codes


def _interior_region_slice(region, h, w):
    """Interior pixels of a region, expressed in the (h-2, w-2) interior index space."""
    left, top, right, bottom = region
    top, left = max(top, 1), max(left, 1)
    bottom, right = min(bottom, h - 1), min(right, w - 1)
    if bottom <= top or right <= left:
        return None
    return (slice(top - 1, bottom - 1), slice(left - 1, right - 1))


def lbp_region_histograms(gray: np.ndarray, grid: QuadTreeGrid) -> np.ndarray:
    """Raw uniform-pattern counts per region; row mass equals interior pixels in the region."""
    h, w = gray.shape
    bins = _UNIFORM_TABLE[lbp_codes(gray)]
    hists = np.zeros((len(grid.regions), LBP_BINS))
    for i, region in enumerate(grid.regions):
        sl = _interior_region_slice(region, h, w)
        if sl is None:
            continue
        hists[i] = np.bincount(bins[sl].ravel(), minlength=LBP_BINS)
    return hists


def lbp_descriptor(gray: np.ndarray,
                   config: DescriptorConfig = DEFAULT_CONFIG) -> FeatureVector:
    """Uniform LBP histograms pooled over the quad-tree regions of the binarized image.

    Each region histogram is L1 normalized (empty regions stay zero), the
    concatenation is L2 normalized.
    """
    grid = quadtree_partition(binarize(gray), config.quadtree_levels)
    hists = lbp_region_histograms(gray, grid)
    sums = hists.sum(axis=1, keepdims=True)
    np.divide(hists, sums, out=hists, where=sums > 0)
    return FeatureVector("lbp", _l2_normalized(hists.ravel()))


def gradient_field(gray: np.ndarray):
    """Central-difference gradients on interior pixels: (magnitude, orientation mod pi)."""
    h, w = gray.shape
    if h < 3 or w < 3:
        raise ValueError(f"image {w}x{h} too small for gradients")
    g = gray.astype(np.float64)
    gx = g[1:-1, 2:] - g[1:-1, :-2]
    gy = g[2:, 1:-1] - g[:-2, 1:-1]
    magnitude = np.hypot(gx, gy)
    orientation = np.mod(np.arctan2(gy, gx), math.pi)
    return magnitude, orientation


def hog_region_histograms(gray: np.ndarray, grid: QuadTreeGrid,
                          bins: int) -> np.ndarray:
    """Magnitude-weighted orientation counts per region, linearly interpolated between bins."""
    h, w = gray.shape
    magnitude, orientation = gradient_field(gray)
    position = orientation / (math.pi / bins)
    k0 = np.floor(position).astype(np.int64)
    frac = position - k0
    k0 = np.mod(k0, bins)
    k1 = np.mod(k0 + 1, bins)
    hists = np.zeros((len(grid.regions), bins))
    for i, region in enumerate(grid.regions):
        sl = _interior_region_slice(region, h, w)
        if sl is None:
            continue
        hists[i] = (np.bincount(k0[sl].ravel(), weights=(magnitude[sl] * (1.0 - frac[sl])).ravel(),
                                minlength=bins)
                    + np.bincount(k1[sl].ravel(), weights=(magnitude[sl] * frac[sl]).ravel(),
                                  minlength=bins))
    return hists


def hog_descriptor(gray: np.ndarray,
                   config: DescriptorConfig = DEFAULT_CONFIG) -> FeatureVector:
    """Unsigned gradient histograms pooled over the quad-tree grid.

    Per-region L2 normalization, then global L2; a gradient-free image yields
    the zero vector.
    """
    grid = quadtree_partition(binarize(gray), config.quadtree_levels)
    hists = hog_region_histograms(gray, grid, config.hog_bins)
    norms = np.linalg.norm(hists, axis=1, keepdims=True)
    np.divide(hists, norms, out=hists, where=norms > 0)
    return FeatureVector("hog", _l2_normalized(hists.ravel()))


def descriptor_distance(a: FeatureVector, b: FeatureVector) -> float:
    """Euclidean distance; defined only within one method's descriptor space."""
    if a.method != b.method:
        raise ValueError(f"cannot compare {a.method!r} with {b.method!r} descriptors")
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    diff = a.values - b.values
    return float(np.sqrt((diff * diff).sum()))


def extract_descriptor(method: str, gray: np.ndarray,
                       config: DescriptorConfig = DEFAULT_CONFIG) -> FeatureVector:
    if method == "quadtree":
        return quadtree_descriptor(binarize(gray), config)
    if method == "lbp":
        return lbp_descriptor(gray, config)
    if method == "hog":
        return hog_descriptor(gray, config)
    raise ValueError(f"unknown descriptor method {method!r}")
