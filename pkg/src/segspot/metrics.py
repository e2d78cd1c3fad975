"""Distance matrices, rankings and the retrieval metrics averaged over queries."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from statistics import fmean
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import WordSample

METRIC_NAMES = ("mAP", "rPrecision", "accuracy", "P@10", "selfClassification")


@dataclass
class DistanceMatrix:
    """Queries x candidates distances; the lingua franca between methods and evaluation."""

    query_ids: list[int]
    candidate_ids: list[int]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.query_ids), len(self.candidate_ids)):
            raise ValueError(f"matrix shape {self.values.shape} does not match id lists "
                             f"({len(self.query_ids)} x {len(self.candidate_ids)})")
        if len(set(self.query_ids)) != len(self.query_ids):
            raise ValueError("duplicate query ids")
        if len(set(self.candidate_ids)) != len(self.candidate_ids):
            raise ValueError("duplicate candidate ids")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("distances must be finite")
        if np.any(self.values < 0):
            raise ValueError("distances must be non-negative")


@dataclass
class Ranking:
    """Per query, candidate ids sorted by ascending distance."""

    query_ids: list[int]
    orders: list[np.ndarray]


def distance_matrix(query_ids: Sequence[int], candidate_ids: Sequence[int],
                    query_feats: Mapping[int, np.ndarray],
                    candidate_feats: Mapping[int, np.ndarray],
                    pair_distance: Callable[[np.ndarray, np.ndarray], float]) -> DistanceMatrix:
    """Fill the matrix with pair_distance over extracted features."""
    values = np.empty((len(query_ids), len(candidate_ids)))
    for i, qid in enumerate(query_ids):
        q = query_feats[qid]
        for j, cid in enumerate(candidate_ids):
            values[i, j] = pair_distance(q, candidate_feats[cid])
    return DistanceMatrix(list(query_ids), list(candidate_ids), values)


def rank(matrix: DistanceMatrix, suppress_diagonal: bool = False) -> Ranking:
    """Argsort each query's distances, ascending, ties broken by ascending sample id.

    With suppress_diagonal the candidate carrying the query's own sample id is
    removed from that query's ranking.
    """
    cand = np.asarray(matrix.candidate_ids)
    orders = []
    for i, qid in enumerate(matrix.query_ids):
        order = np.lexsort((cand, matrix.values[i]))
        ranked = cand[order]
        if suppress_diagonal:
            ranked = ranked[ranked != qid]
        orders.append(ranked)
    return Ranking(list(matrix.query_ids), orders)


def relevance(query: WordSample, candidate: WordSample) -> bool:
    """Case-insensitive transcription match."""
    return query.transcription.casefold() == candidate.transcription.casefold()


def average_precision(relevances: Sequence[bool]) -> float:
    """Mean of precision at each relevant rank."""
    precisions = []
    hits = 0
    for k, rel in enumerate(relevances, start=1):
        if rel:
            hits += 1
            precisions.append(hits / k)
    if not precisions:
        raise ValueError("average precision needs at least one relevant candidate")
    return sum(precisions) / len(precisions)


def r_precision(relevances: Sequence[bool], total_relevant: int | None = None) -> float:
    """Precision at the rank where perfect precision and recall are both possible."""
    r = int(sum(relevances)) if total_relevant is None else total_relevant
    if r < 1:
        raise ValueError("rPrecision needs at least one relevant candidate")
    return sum(relevances[:r]) / r


def precision_at_k(relevances: Sequence[bool], k: int) -> float:
    """Relevant fraction of the top k, truncated to the available candidates."""
    if k < 1:
        raise ValueError("k must be >= 1")
    kk = min(k, len(relevances))
    if kk == 0:
        raise ValueError("no candidates to rank")
    return sum(relevances[:kk]) / kk


def self_classification_accuracy(matrix: DistanceMatrix) -> float:
    """Fraction of queries whose nearest candidate, diagonal kept, is their own sample id."""
    ranking = rank(matrix, suppress_diagonal=False)
    hits = sum(1 for qid, order in zip(ranking.query_ids, ranking.orders)
               if order.size and int(order[0]) == qid)
    return hits / len(ranking.query_ids)


@dataclass(frozen=True)
class MetricRecord:
    distortion_level: float
    method: str
    metric: str
    value: float


def relevance_lists(matrix: DistanceMatrix,
                    transcriptions: Mapping[int, str]) -> list[tuple[int, list[bool]]]:
    """Per query, the relevance flags of its diagonal-suppressed ranking."""
    ranking = rank(matrix, suppress_diagonal=True)
    folded = {sid: t.casefold() for sid, t in transcriptions.items()}
    out = []
    for qid, order in zip(ranking.query_ids, ranking.orders):
        qt = folded[qid]
        out.append((qid, [folded[int(cid)] == qt for cid in order]))
    return out


def per_query_average_precision(matrix: DistanceMatrix,
                                transcriptions: Mapping[int, str]) -> dict[int, float]:
    return {qid: average_precision(rels)
            for qid, rels in relevance_lists(matrix, transcriptions)}


def mean_metrics(matrix: DistanceMatrix, transcriptions: Mapping[int, str],
                 level: float, method: str) -> list[MetricRecord]:
    """All five metrics for one (level, method) cell, averaged uniformly over queries."""
    aps, rps, accs, p10s = [], [], [], []
    for qid, rels in relevance_lists(matrix, transcriptions):
        aps.append(average_precision(rels))
        rps.append(r_precision(rels))
        accs.append(precision_at_k(rels, 1))
        p10s.append(precision_at_k(rels, 10))
    return [
        MetricRecord(level, method, "mAP", fmean(aps)),
        MetricRecord(level, method, "rPrecision", fmean(rps)),
        MetricRecord(level, method, "accuracy", fmean(accs)),
        MetricRecord(level, method, "P@10", fmean(p10s)),
        MetricRecord(level, method, "selfClassification", self_classification_accuracy(matrix)),
    ]


def write_report(path, records: Sequence[MetricRecord]):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["distortion_level", "method", "metric", "value"])
        for rec in records:
            writer.writerow([repr(rec.distortion_level), rec.method, rec.metric, repr(rec.value)])


def read_report(path) -> list[MetricRecord]:
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["distortion_level", "method", "metric", "value"]:
            raise ValueError(f"{path}: not a metric report (bad header {header})")
        for row in reader:
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"{path}: malformed report row {row}")
            records.append(MetricRecord(float(row[0]), row[1], row[2], float(row[3])))
    return records


def write_distance_matrix(path, matrix: DistanceMatrix):
    """Text export: two id header lines then one whitespace-separated row per query."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("query_ids: " + " ".join(str(i) for i in matrix.query_ids) + "\n")
        fh.write("candidate_ids: " + " ".join(str(i) for i in matrix.candidate_ids) + "\n")
        for row in matrix.values:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_distance_matrix(path) -> DistanceMatrix:
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if len(lines) < 2 or not lines[0].startswith("query_ids:") \
            or not lines[1].startswith("candidate_ids:"):
        raise ValueError(f"{path}: missing query_ids/candidate_ids header lines")
    query_ids = [int(tok) for tok in lines[0].split(":", 1)[1].split()]
    candidate_ids = [int(tok) for tok in lines[1].split(":", 1)[1].split()]
    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        values = [float(tok) for tok in line.split()]
        if len(values) != len(candidate_ids):
            raise ValueError(f"{path}: line {lineno}: expected {len(candidate_ids)} values, "
                             f"got {len(values)}")
        rows.append(values)
    if len(rows) != len(query_ids):
        raise ValueError(f"{path}: expected {len(query_ids)} rows, got {len(rows)}")
    return DistanceMatrix(query_ids, candidate_ids, np.array(rows))
