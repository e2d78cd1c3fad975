"""Experiment orchestration: configuration, distortion sweeps, caching and reports."""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import cache, dataset_io, dtw, metrics
from .core import crop, binarize, partition_pages, query_set
from .descriptors import DescriptorConfig, extract_descriptor
from .distortion import DEFAULT_LEVELS, generate_distorted_database
from .metrics import DistanceMatrix, MetricRecord

log = logging.getLogger("segspot")

RETRIEVAL_METHODS = ("quadtree", "lbp", "hog", "dtw")
CONFIG_ENV_VAR = "SEGSPOT_CONFIG"


class ConfigError(Exception):
    """Unusable invocation: missing or malformed configuration."""


class DataError(Exception):
    """Well-formed invocation over bad data."""


def parse_levels(text: str) -> tuple[float, ...]:
    """Comma list ("0.2,0.3,1.0") or start:stop:step grid ("0.01:1.0:0.01")."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"bad level range {text!r}, expected start:stop:step")
        start, stop, step = (float(p) for p in parts)
        count = int(round((stop - start) / step)) + 1
        levels = tuple(round(start + i * step, 6) for i in range(count))
    else:
        levels = tuple(float(tok) for tok in text.split(",") if tok.strip())
    if not levels:
        raise ConfigError(f"no levels in {text!r}")
    return levels


def read_config_file(path) -> dict[str, str]:
    """Flat key = value text; '#' starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


@dataclass
class ExperimentConfig:
    dataset_name: str
    ground_truth: Path
    pages_dir: Path
    output: Path
    seed: int
    methods: tuple[str, ...] = RETRIEVAL_METHODS
    levels: tuple[float, ...] = DEFAULT_LEVELS
    band_fraction: float = 0.15
    train_fraction: float = 0.75
    workers: int = 1
    quadtree_levels: int = 2
    hog_bins: int = 9

    def __post_init__(self):
        self.ground_truth = Path(self.ground_truth)
        self.pages_dir = Path(self.pages_dir)
        self.output = Path(self.output)
        if not self.ground_truth.is_file():
            raise ConfigError(f"ground truth file not found: {self.ground_truth}")
        if not self.pages_dir.is_dir():
            raise ConfigError(f"pages directory not found: {self.pages_dir}")
        unknown = set(self.methods) - set(RETRIEVAL_METHODS)
        if unknown:
            raise ConfigError(f"unknown methods: {sorted(unknown)} "
                              f"(available: {', '.join(RETRIEVAL_METHODS)})")

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        raw = read_config_file(path)
        base = Path(path).parent

        def resolve(p):
            p = Path(p)
            return p if p.is_absolute() else base / p

        kwargs = {}
        if "dataset_name" in raw:
            kwargs["dataset_name"] = raw["dataset_name"]
        for key in ("ground_truth", "pages_dir", "output"):
            if key in raw:
                kwargs[key] = resolve(raw[key])
        if "seed" in raw:
            kwargs["seed"] = int(raw["seed"])
        if "methods" in raw:
            kwargs["methods"] = tuple(tok.strip() for tok in raw["methods"].split(",") if tok.strip())
        if "levels" in raw:
            kwargs["levels"] = parse_levels(raw["levels"])
        for key, conv in (("band_fraction", float), ("train_fraction", float),
                          ("workers", int), ("quadtree_levels", int), ("hog_bins", int)):
            if key in raw:
                kwargs[key] = conv(raw[key])
        for key, value in overrides.items():
            if value is not None:
                kwargs[key] = value
        kwargs.setdefault("dataset_name", "dataset")
        kwargs.setdefault("output", base / "out")
        missing = {"ground_truth", "pages_dir", "seed"} - kwargs.keys()
        if missing:
            raise ConfigError(f"{path}: missing required config keys: {sorted(missing)}")
        return cls(**kwargs)


def write_config_file(path, config: ExperimentConfig):
    lines = [
        "# segspot experiment configuration",
        f"dataset_name = {config.dataset_name}",
        f"ground_truth = {config.ground_truth}",
        f"pages_dir = {config.pages_dir}",
        f"output = {config.output}",
        f"seed = {config.seed}",
        f"methods = {','.join(config.methods)}",
        f"levels = {','.join(repr(lv) for lv in config.levels)}",
        f"band_fraction = {config.band_fraction}",
        f"train_fraction = {config.train_fraction}",
        f"workers = {config.workers}",
        f"quadtree_levels = {config.quadtree_levels}",
        f"hog_bins = {config.hog_bins}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def level_tag(level: float) -> str:
    return f"L{level:.4f}"


_POOL_STATE: dict = {}


def _dtw_pool_init(candidates, band_fraction):
    _POOL_STATE["candidates"] = candidates
    _POOL_STATE["band_fraction"] = band_fraction


def _dtw_pool_row(query_seq):
    return [dtw.dtw_distance(query_seq, c, _POOL_STATE["band_fraction"])
            for c in _POOL_STATE["candidates"]]


class Experiment:
    """Loads a dataset once and serves cache-aware method computations."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        try:
            self.dataset = dataset_io.load_dataset(config.dataset_name, config.ground_truth,
                                                   config.pages_dir)
        except (dataset_io.DataFormatError, ValueError, OSError) as exc:
            raise DataError(str(exc)) from exc
        self.partition = partition_pages(self.dataset, config.train_fraction)
        self.desc_config = DescriptorConfig(quadtree_levels=config.quadtree_levels,
                                            hog_bins=config.hog_bins)
        self.transcriptions = {s.sample_id: s.transcription for s in self.dataset.samples}
        self.test_ids = list(self.partition.test)
        self.train_ids = list(self.partition.train)
        self.query_ids = query_set([self.dataset.sample(i) for i in self.test_ids])
        self.train_query_ids = query_set([self.dataset.sample(i) for i in self.train_ids])
        self.cache_dir = config.output / "cache"

    # -- extraction ---------------------------------------------------------

    def _word_image(self, sample_id: int, box) -> np.ndarray:
        sample = self.dataset.sample(sample_id)
        return crop(self.dataset.page(sample.page_id), box)

    def _extract_one(self, method: str, sample_id: int, box) -> np.ndarray:
        try:
            image = self._word_image(sample_id, box)
            if method == "dtw":
                return dtw.column_profiles(binarize(image))
            return extract_descriptor(method, image, self.desc_config).values
        except Exception as exc:
            sample = self.dataset.sample(sample_id)
            raise DataError(f"extraction failed for sample {sample_id} "
                            f"(page {sample.page_id!r}, method {method}): {exc}") from exc

    def _param_hash(self, method: str) -> str:
        key = (f"{self.dataset.name}|{self.config.seed}|{method}"
               f"|{self.config.quadtree_levels}|{self.config.hog_bins}")
        return hashlib.sha1(key.encode()).hexdigest()[:10]

    def _cache_path(self, method: str, tag: str) -> Path:
        return self.cache_dir / f"{method}_{self._param_hash(method)}_{tag}.bin"

    def representations(self, method: str, ids: Sequence[int], boxes: Mapping[int, object],
                        tag: str) -> dict[int, np.ndarray]:
        """Extract (or load from cache) the per-sample representation for one method."""
        path = self._cache_path(method, tag)
        if path.is_file():
            if method == "dtw":
                _, cached_ids, seqs = cache.read_sequences(path)
                loaded = dict(zip(cached_ids.tolist(), seqs))
            else:
                _, cached_ids, matrix = cache.read_feature_matrix(path)
                loaded = dict(zip(cached_ids.tolist(), matrix))
            if set(loaded) >= set(ids):
                return {i: loaded[i] for i in ids}
        feats = {i: self._extract_one(method, i, boxes[i]) for i in ids}
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        if method == "dtw":
            cache.write_sequences(path, method, list(ids), [feats[i] for i in ids])
        else:
            cache.write_feature_matrix(path, method, list(ids),
                                       np.stack([feats[i] for i in ids]))
        return feats

    # -- distance matrices --------------------------------------------------

    def ground_truth_boxes(self, ids: Sequence[int]):
        return {i: self.dataset.sample(i).box for i in ids}

    def distorted_database(self, level: float):
        return generate_distorted_database([self.dataset.sample(i) for i in self.test_ids],
                                           level, self.config.seed)

    def query_representations(self, method: str) -> dict[int, np.ndarray]:
        # queries are always undistorted ground-truth crops, shared across levels
        feats = self.representations(method, self.test_ids,
                                     self.ground_truth_boxes(self.test_ids), level_tag(1.0))
        return {i: feats[i] for i in self.query_ids}

    def matrix(self, method: str, level: float) -> DistanceMatrix:
        """Undistorted queries against the distorted retrieval database at one level."""
        db = self.distorted_database(level)
        cand_feats = self.representations(method, self.test_ids, db.boxes, level_tag(level))
        query_feats = self.query_representations(method)
        return self._matrix_from_feats(method, self.query_ids, self.test_ids,
                                       query_feats, cand_feats)

    def train_matrix(self, method: str) -> DistanceMatrix:
        boxes = self.ground_truth_boxes(self.train_ids)
        feats = self.representations(method, self.train_ids, boxes, "train")
        query_feats = {i: feats[i] for i in self.train_query_ids}
        return self._matrix_from_feats(method, self.train_query_ids, self.train_ids,
                                       query_feats, feats)

    def _matrix_from_feats(self, method, query_ids, candidate_ids, query_feats,
                           cand_feats) -> DistanceMatrix:
        if method == "dtw":
            values = self._dtw_values(query_ids, candidate_ids, query_feats, cand_feats)
        else:
            q = np.stack([query_feats[i] for i in query_ids])
            c = np.stack([cand_feats[i] for i in candidate_ids])
            values = np.empty((len(query_ids), len(candidate_ids)))
            for row, qv in enumerate(q):
                diff = c - qv
                values[row] = np.sqrt((diff * diff).sum(axis=1))
        return DistanceMatrix(list(query_ids), list(candidate_ids), values)

    def _dtw_values(self, query_ids, candidate_ids, query_feats, cand_feats) -> np.ndarray:
        cands = [cand_feats[i] for i in candidate_ids]
        queries = [query_feats[i] for i in query_ids]
        band = self.config.band_fraction
        if self.config.workers > 1:
            with ProcessPoolExecutor(max_workers=self.config.workers,
                                     initializer=_dtw_pool_init,
                                     initargs=(cands, band)) as pool:
                rows = list(pool.map(_dtw_pool_row, queries))
        else:
            rows = [[dtw.dtw_distance(q, c, band) for c in cands] for q in queries]
        return np.asarray(rows)

    def random_matrix(self, level: float) -> DistanceMatrix:
        """Context pseudo-method for independence heatmaps: seeded uniform distances."""
        rng = np.random.default_rng(np.random.SeedSequence(
            (self.config.seed & 0xFFFFFFFFFFFFFFFF, 0xA11DEA, int(round(level * 10 ** 6)))))
        values = rng.uniform(0.0, 1.0, (len(self.query_ids), len(self.test_ids)))
        return DistanceMatrix(list(self.query_ids), list(self.test_ids), values)

    # -- evaluation ---------------------------------------------------------

    def evaluate_cell(self, method: str, level: float,
                      matrix: DistanceMatrix | None = None) -> list[MetricRecord]:
        if matrix is None:
            matrix = self.matrix(method, level)
        return metrics.mean_metrics(matrix, self.transcriptions, level, method)

    def report_path(self, method: str, level: float) -> Path:
        return self.config.output / f"report_{level_tag(level)}_{method}.csv"

    def matrix_path(self, method: str, level: float) -> Path:
        return self.config.output / f"matrix_{level_tag(level)}_{method}.txt"

    def run_sweep(self, levels: Sequence[float] | None = None,
                  methods: Sequence[str] | None = None,
                  imports: Mapping[str, DistanceMatrix] | None = None) -> list[Path]:
        """Per (level, method) report files; existing files are kept, failures isolated."""
        levels = list(levels if levels is not None else self.config.levels)
        methods = list(methods if methods is not None else self.config.methods)
        self.config.output.mkdir(parents=True, exist_ok=True)
        written = []
        for level in levels:
            for method in methods:
                path = self.report_path(method, level)
                if path.is_file():
                    log.info("skip existing %s", path.name)
                    written.append(path)
                    continue
                try:
                    records = self.evaluate_cell(method, level)
                except Exception:
                    log.exception("cell (level=%s, method=%s) failed", level, method)
                    continue
                metrics.write_report(path, records)
                log.info("wrote %s", path.name)
                written.append(path)
            for name, matrix in (imports or {}).items():
                path = self.report_path(name, level)
                if path.is_file():
                    written.append(path)
                    continue
                metrics.write_report(path, self.evaluate_cell(name, level, matrix))
                written.append(path)
        return written


def import_external_matrix(path, query_ids: Sequence[int],
                           candidate_ids: Sequence[int]) -> DistanceMatrix:
    """Load a distance-matrix file and align it to the dataset's canonical id order."""
    try:
        loaded = metrics.read_distance_matrix(path)
    except (ValueError, OSError) as exc:
        raise DataError(f"{path}: {exc}") from exc
    want_q, want_c = set(query_ids), set(candidate_ids)
    have_q, have_c = set(loaded.query_ids), set(loaded.candidate_ids)
    offenders = []
    offenders += [f"unexpected query id {i}" for i in loaded.query_ids if i not in want_q]
    offenders += [f"missing query id {i}" for i in query_ids if i not in have_q]
    offenders += [f"unexpected candidate id {i}" for i in loaded.candidate_ids if i not in want_c]
    offenders += [f"missing candidate id {i}" for i in candidate_ids if i not in have_c]
    if offenders:
        shown = "; ".join(offenders[:10])
        raise DataError(f"{path}: ids do not match the dataset ({len(offenders)} problems, "
                        f"first 10: {shown})")
    qpos = {i: k for k, i in enumerate(loaded.query_ids)}
    cpos = {i: k for k, i in enumerate(loaded.candidate_ids)}
    values = loaded.values[np.ix_([qpos[i] for i in query_ids],
                                  [cpos[i] for i in candidate_ids])]
    return DistanceMatrix(list(query_ids), list(candidate_ids), values)


def fusion_method_name(methods: Sequence[str]) -> str:
    return "fusion(" + "+".join(methods) + ")"


def aggregate_reports(output_dir) -> list[MetricRecord]:
    records = []
    for path in sorted(Path(output_dir).glob("report_L*.csv")):
        records.extend(metrics.read_report(path))
    records.sort(key=lambda r: (r.distortion_level, r.method, r.metric))
    return records


def write_combined_report(output_dir) -> Path:
    records = aggregate_reports(output_dir)
    if not records:
        raise DataError(f"no report_L*.csv files under {output_dir}")
    path = Path(output_dir) / "report.csv"
    metrics.write_report(path, records)
    return path


def render_report_figures(records: Sequence[MetricRecord], output_dir) -> list[Path]:
    """One metric-vs-IoU curve figure per metric, rendered next to the combined report."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    output_dir = Path(output_dir)
    by_metric: dict[str, dict[str, list[tuple[float, float]]]] = {}
    for rec in records:
        by_metric.setdefault(rec.metric, {}).setdefault(rec.method, []).append(
            (rec.distortion_level, rec.value))
    paths = []
    for metric_name, by_method in sorted(by_metric.items()):
        fig, ax = plt.subplots(figsize=(6, 4))
        for method, points in sorted(by_method.items()):
            points = sorted(points)
            ax.plot([p[0] for p in points], [p[1] for p in points], marker="o",
                    markersize=3, label=method)
        ax.set_xlabel("IoU level")
        ax.set_ylabel(metric_name)
        ax.set_ylim(-0.02, 1.02)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        out = output_dir / f"fig_{metric_name.replace('@', '')}.png"
        fig.savefig(out, dpi=120)
        plt.close(fig)
        paths.append(out)
    return paths
