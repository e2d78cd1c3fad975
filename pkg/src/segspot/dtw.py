"""Column-profile word features matched with banded dynamic time warping."""

from __future__ import annotations

import math

import numpy as np

PROFILE_FEATURES = 4
DEFAULT_BAND_FRACTION = 0.15


def column_profiles(binary: np.ndarray) -> np.ndarray:
    """Per-column ink features, z-normalized over the sequence.

    Columns carry (ink count, top-most ink row, bottom-most ink row,
    background-to-ink transition count); ink-free columns use the image height
    as the profile sentinel. Returns an array of shape (width, 4).
    """
    if binary.size == 0:
        raise ValueError("cannot profile an empty image")
    ink = np.asarray(binary, dtype=bool)
    h, w = ink.shape
    projection = ink.sum(axis=0)
    has_ink = projection > 0
    upper = np.where(has_ink, ink.argmax(axis=0), h)
    lower = np.where(has_ink, h - 1 - ink[::-1, :].argmax(axis=0), h)
    run_starts = ink & ~np.vstack([np.zeros((1, w), dtype=bool), ink[:-1, :]])
    transitions = run_starts.sum(axis=0)
    feats = np.stack([projection, upper, lower, transitions], axis=1).astype(np.float64)
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    out = np.zeros_like(feats)
    np.divide(feats - mean, std, out=out, where=std > 0)
    return out


def band_halfwidth(n: int, m: int, band_fraction: float) -> int:
    """Sakoe-Chiba half-width, floored at the length difference so a path exists."""
    return max(math.ceil(band_fraction * max(n, m)), abs(n - m))


def dtw_alignment(a: np.ndarray, b: np.ndarray,
                  band_fraction: float = DEFAULT_BAND_FRACTION) -> tuple[float, int]:
    """Optimal warping cost and its path length under a Sakoe-Chiba band.

    Steps are (1,0), (0,1), (1,1) with Euclidean local cost between feature
    columns. Ties between predecessors resolve to the shortest path, which
    keeps the result symmetric in its arguments.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        raise ValueError("cannot align an empty sequence")
    r = band_halfwidth(n, m, band_fraction)
    inf = math.inf
    cost = np.full((n, m), inf)
    plen = np.zeros((n, m), dtype=np.int64)
    for i in range(n):
        jlo = max(0, i - r)
        jhi = min(m, i + r + 1)
        diff = b[jlo:jhi] - a[i]
        local = np.sqrt((diff * diff).sum(axis=1))
        ci = cost[i]
        cp = cost[i - 1] if i > 0 else None
        li = plen[i]
        lp = plen[i - 1] if i > 0 else None
        for j in range(jlo, jhi):
            c = local[j - jlo]
            if i == 0 and j == 0:
                ci[0] = c
                li[0] = 1
                continue
            best = inf
            best_len = 0
            if i > 0 and j > 0:
                best, best_len = cp[j - 1], lp[j - 1]
            if i > 0 and (cp[j] < best or (cp[j] == best and lp[j] < best_len)):
                best, best_len = cp[j], lp[j]
            if j > 0 and (ci[j - 1] < best or (ci[j - 1] == best and li[j - 1] < best_len)):
                best, best_len = ci[j - 1], li[j - 1]
            ci[j] = c + best
            li[j] = best_len + 1
    return float(cost[n - 1, m - 1]), int(plen[n - 1, m - 1])


def dtw_distance(a: np.ndarray, b: np.ndarray,
                 band_fraction: float = DEFAULT_BAND_FRACTION) -> float:
    """Warping cost divided by the warping-path length."""
    total, length = dtw_alignment(a, b, band_fraction)
    return total / length
