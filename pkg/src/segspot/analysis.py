"""Method-independence measures, weighted late fusion and segmentation-quality profiling."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from statistics import fmean
from typing import Mapping, Sequence

import numpy as np

from .core import BoundingBox, iou
from .metrics import DistanceMatrix, Ranking, per_query_average_precision


def spearman_footrule(a: Ranking, b: Ranking) -> float:
    """Rank-position L1 distance between two methods' retrievals, averaged over queries.

    Each query's footrule is normalized by its maximum floor(n^2 / 2) so values
    are comparable across query sets; 0 means identical rankings, 1 reversed.
    """
    if a.query_ids != b.query_ids:
        raise ValueError("rankings cover different query sets")
    per_query = []
    for qid, order_a, order_b in zip(a.query_ids, a.orders, b.orders):
        pos_a = {int(c): i for i, c in enumerate(order_a)}
        pos_b = {int(c): i for i, c in enumerate(order_b)}
        if pos_a.keys() != pos_b.keys():
            raise ValueError(f"query {qid}: rankings cover different candidate sets")
        n = len(pos_a)
        maximum = n * n // 2
        if maximum == 0:
            per_query.append(0.0)
            continue
        raw = sum(abs(pos_a[c] - pos_b[c]) for c in pos_a)
        per_query.append(raw / maximum)
    return fmean(per_query)


def easy_hard_labels(ap_values: Sequence[float]) -> np.ndarray:
    """1 for queries whose AP is above the median, 0 otherwise (median itself maps to 0)."""
    if len(ap_values) < 2:
        raise ValueError("labelling needs at least 2 queries")
    values = np.asarray(ap_values, dtype=np.float64)
    return (values > np.median(values)).astype(np.int64)


def label_correlation(a: Sequence[int], b: Sequence[int]) -> float:
    """Pearson correlation of two binary labellings; NaN when either is constant."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("label vectors differ in length")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt((da * da).sum() * (db * db).sum())
    if denom == 0.0:
        return float("nan")
    return float((da * db).sum() / denom)


@dataclass(frozen=True)
class FusionWeights:
    """Per-method non-negative weights on the simplex."""

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) < 2:
            raise ValueError("fusion needs at least 2 methods")
        if any(w < 0 for w in self.values):
            raise ValueError("weights must be non-negative")
        if abs(sum(self.values) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {sum(self.values)}")


def _minmax_rows(values: np.ndarray) -> np.ndarray:
    lo = values.min(axis=1, keepdims=True)
    hi = values.max(axis=1, keepdims=True)
    span = hi - lo
    out = np.zeros_like(values)
    np.divide(values - lo, span, out=out, where=span > 0)
    return out


def fuse_distances(matrices: Sequence[DistanceMatrix], weights: FusionWeights) -> DistanceMatrix:
    """Weighted sum of per-query min-max normalized distance vectors.

    The normalization keeps every constituent's per-query ranking while making
    heterogeneous distance scales commensurable; a degenerate per-query range
    normalizes to an all-zero row.
    """
    if len(matrices) != len(weights.values):
        raise ValueError("one weight per matrix required")
    first = matrices[0]
    for m in matrices[1:]:
        if m.query_ids != first.query_ids or m.candidate_ids != first.candidate_ids:
            raise ValueError("fusion requires identical query and candidate id lists")
    fused = np.zeros_like(first.values)
    for w, m in zip(weights.values, matrices):
        fused += w * _minmax_rows(m.values)
    return DistanceMatrix(list(first.query_ids), list(first.candidate_ids), fused)


def _simplex_grid(n_methods: int, step: float):
    ticks = round(1.0 / step)
    for combo in itertools.product(range(ticks + 1), repeat=n_methods):
        if sum(combo) == ticks:
            yield tuple(k / ticks for k in combo)


def weight_search(matrices: Sequence[DistanceMatrix], transcriptions: Mapping[int, str],
                  step: float = 0.1) -> FusionWeights:
    """Exhaustive simplex grid search maximizing mAP of the fused matrix.

    Run on train-split matrices; ties go to the lexicographically smallest
    weight vector, so the result is deterministic.
    """
    if len(matrices) < 2:
        raise ValueError("weight search needs at least 2 matrices")
    best_weights = None
    best_map = -1.0
    for values in _simplex_grid(len(matrices), step):
        fused = fuse_distances(matrices, FusionWeights(values))
        mean_ap = fmean(per_query_average_precision(fused, transcriptions).values())
        if mean_ap > best_map:
            best_map = mean_ap
            best_weights = values
    return FusionWeights(best_weights)


@dataclass(frozen=True)
class SummaryStats:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    mean: float

    @classmethod
    def of(cls, values: np.ndarray) -> "SummaryStats":
        return cls(float(values.min()), float(np.percentile(values, 25)),
                   float(np.median(values)), float(np.percentile(values, 75)),
                   float(values.max()), float(values.mean()))


@dataclass
class SegQualityProfile:
    """Per-page IoU match matrices with their row/column maxima and summaries.

    Row maxima profile how well each ground-truth word was found (soft
    detection); column maxima how word-like each proposal is (soft recognition
    accuracy). No threshold is applied, the raw IoU is the measurement.
    """

    page_matrices: dict[str, np.ndarray]
    gt_best: np.ndarray
    proposal_best: np.ndarray
    gt_stats: SummaryStats | None
    proposal_stats: SummaryStats | None


def segmentation_quality(gt_boxes: Mapping[str, Sequence[BoundingBox]],
                         proposed_boxes: Mapping[str, Sequence[BoundingBox]]) -> SegQualityProfile:
    """Profile a proposed segmentation against ground truth, page by page."""
    page_matrices = {}
    gt_best = []
    proposal_best = []
    pages = sorted(set(gt_boxes) | set(proposed_boxes))
    for page in pages:
        gts = list(gt_boxes.get(page, ()))
        props = list(proposed_boxes.get(page, ()))
        matrix = np.zeros((len(gts), len(props)))
        for i, g in enumerate(gts):
            for j, p in enumerate(props):
                matrix[i, j] = iou(g, p)
        page_matrices[page] = matrix
        if gts:
            gt_best.extend(matrix.max(axis=1) if props else np.zeros(len(gts)))
        if props:
            proposal_best.extend(matrix.max(axis=0) if gts else np.zeros(len(props)))
    gt_best = np.asarray(gt_best, dtype=np.float64)
    proposal_best = np.asarray(proposal_best, dtype=np.float64)
    return SegQualityProfile(
        page_matrices=page_matrices,
        gt_best=gt_best,
        proposal_best=proposal_best,
        gt_stats=SummaryStats.of(gt_best) if gt_best.size else None,
        proposal_stats=SummaryStats.of(proposal_best) if proposal_best.size else None,
    )


def write_independence_matrix(path, method_names: Sequence[str], matrix: np.ndarray):
    """Square delimiter-separated matrix with method-name headers (heatmap source)."""
    matrix = np.asarray(matrix)
    if matrix.shape != (len(method_names), len(method_names)):
        raise ValueError("matrix shape does not match the method list")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", *method_names])
        for name, row in zip(method_names, matrix):
            writer.writerow([name, *[repr(float(v)) for v in row]])


def read_independence_matrix(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "method":
            raise ValueError(f"{path}: not an independence matrix (bad header)")
        names = header[1:]
        rows = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(names) + 1:
                raise ValueError(f"{path}: malformed row {row}")
            rows.append([float(v) for v in row[1:]])
    if len(rows) != len(names):
        raise ValueError(f"{path}: expected {len(names)} rows, got {len(rows)}")
    return names, np.array(rows)


def write_segquality(summary_path, maxima_path, profile: SegQualityProfile):
    """Emit quartile summaries plus the raw maxima that feed the boxplot."""
    with open(summary_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "stat", "value"])
        for axis, stats in (("gt_best", profile.gt_stats), ("proposal_best", profile.proposal_stats)):
            if stats is None:
                continue
            for stat in ("minimum", "q1", "median", "q3", "maximum", "mean"):
                writer.writerow([axis, stat, repr(getattr(stats, stat))])
    with open(maxima_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "value"])
        for v in profile.gt_best:
            writer.writerow(["gt_best", repr(float(v))])
        for v in profile.proposal_best:
            writer.writerow(["proposal_best", repr(float(v))])
