import itertools
import math

import numpy as np
import pytest

from segspot.analysis import (FusionWeights, easy_hard_labels, fuse_distances,
                              label_correlation, read_independence_matrix,
                              segmentation_quality, spearman_footrule, weight_search,
                              write_independence_matrix, write_segquality)
from segspot.core import BoundingBox
from segspot.metrics import (DistanceMatrix, Ranking, per_query_average_precision, rank)


def ranking_of(*orders, qids=None):
    qids = qids if qids is not None else list(range(len(orders)))
    return Ranking(list(qids), [np.asarray(o) for o in orders])


def footrule_oracle(order_a, order_b):
    pos_a = {c: i for i, c in enumerate(order_a)}
    pos_b = {c: i for i, c in enumerate(order_b)}
    raw = sum(abs(pos_a[c] - pos_b[c]) for c in pos_a)
    n = len(order_a)
    return raw / (n * n // 2)


class TestSpearmanFootrule:
    def test_identical_is_zero(self):
        r = ranking_of([4, 2, 7, 1])
        assert spearman_footrule(r, r) == 0.0

    def test_reversed_is_one(self):
        a = ranking_of([0, 1, 2, 3])
        b = ranking_of([3, 2, 1, 0])
        # raw footrule 3+1+1+3 = 8, maximum floor(16/2) = 8
        assert spearman_footrule(a, b) == 1.0

    def test_matches_loop_oracle_on_random_permutations(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(2, 12))
            base = list(range(n))
            pa = list(rng.permutation(base))
            pb = list(rng.permutation(base))
            got = spearman_footrule(ranking_of(pa, qids=[0]), ranking_of(pb, qids=[0]))
            assert got == pytest.approx(footrule_oracle(pa, pb), abs=1e-12)
            assert 0.0 <= got <= 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            pa = list(rng.permutation(8))
            pb = list(rng.permutation(8))
            a, b = ranking_of(pa, qids=[0]), ranking_of(pb, qids=[0])
            assert spearman_footrule(a, b) == spearman_footrule(b, a)

    def test_mismatched_candidates_rejected(self):
        with pytest.raises(ValueError):
            spearman_footrule(ranking_of([0, 1], qids=[0]), ranking_of([0, 2], qids=[0]))

    def test_averaged_over_queries(self):
        a = ranking_of([0, 1], [0, 1])
        b = ranking_of([0, 1], [1, 0])
        assert spearman_footrule(a, b) == pytest.approx(0.5)


class TestEasyHardLabels:
    def test_two_queries(self):
        assert easy_hard_labels([0.2, 0.8]).tolist() == [0, 1]

    def test_all_equal_all_zero(self):
        assert easy_hard_labels([0.4, 0.4, 0.4]).tolist() == [0, 0, 0]

    def test_median_itself_is_zero(self):
        assert easy_hard_labels([0.1, 0.5, 0.9]).tolist() == [0, 0, 1]


class TestLabelCorrelation:
    def test_self_correlation_exact_one(self):
        assert label_correlation([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0

    def test_complement_is_minus_one(self):
        assert label_correlation([0, 0, 1, 1], [1, 1, 0, 0]) == -1.0

    def test_orthogonal_is_zero(self):
        assert label_correlation([0, 0, 1, 1], [0, 1, 0, 1]) == 0.0

    def test_constant_is_nan(self):
        assert math.isnan(label_correlation([1, 1, 1], [0, 1, 0]))

    def test_matches_numpy_corrcoef(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            a = rng.integers(0, 2, 12)
            b = rng.integers(0, 2, 12)
            if len(set(a)) < 2 or len(set(b)) < 2:
                continue
            assert label_correlation(a, b) == pytest.approx(np.corrcoef(a, b)[0, 1], abs=1e-12)

    def test_antisymmetric_under_complement(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            a = rng.integers(0, 2, 8)
            b = rng.integers(0, 2, 8)
            if len(set(a)) < 2 or len(set(b)) < 2:
                continue
            assert label_correlation(a, 1 - b) == pytest.approx(-label_correlation(a, b),
                                                                abs=1e-12)


class TestFuseDistances:
    def two_matrices(self):
        qids, cids = [0, 1], [10, 11, 12]
        a = DistanceMatrix(qids, cids, np.array([[0.0, 2.0, 4.0], [9.0, 3.0, 6.0]]))
        b = DistanceMatrix(qids, cids, np.array([[5.0, 1.0, 3.0], [0.5, 0.7, 0.1]]))
        return a, b

    def test_weight_one_reproduces_ranking(self):
        a, b = self.two_matrices()
        fused = fuse_distances([a, b], FusionWeights((1.0, 0.0)))
        ra, rf = rank(a), rank(fused)
        for x, y in zip(ra.orders, rf.orders):
            assert x.tolist() == y.tolist()

    def test_self_fusion_keeps_ranking(self):
        a, _ = self.two_matrices()
        fused = fuse_distances([a, a], FusionWeights((0.5, 0.5)))
        for x, y in zip(rank(a).orders, rank(fused).orders):
            assert x.tolist() == y.tolist()

    def test_hand_computed_two_by_two(self):
        qids, cids = [0, 1], [5, 6]
        a = DistanceMatrix(qids, cids, np.array([[1.0, 3.0], [2.0, 2.0]]))
        b = DistanceMatrix(qids, cids, np.array([[10.0, 0.0], [4.0, 8.0]]))
        fused = fuse_distances([a, b], FusionWeights((0.5, 0.5)))
        # a normalized: [[0,1],[0,0]] (degenerate row -> zeros); b: [[1,0],[0,1]]
        assert np.allclose(fused.values, np.array([[0.5, 0.5], [0.0, 0.5]]))

    def test_id_mismatch_rejected(self):
        a, _ = self.two_matrices()
        other = DistanceMatrix([0, 2], a.candidate_ids, a.values.copy())
        with pytest.raises(ValueError):
            fuse_distances([a, other], FusionWeights((0.5, 0.5)))

    def test_weights_validated(self):
        with pytest.raises(ValueError):
            FusionWeights((0.7, 0.7))
        with pytest.raises(ValueError):
            FusionWeights((1.5, -0.5))
        with pytest.raises(ValueError):
            FusionWeights((1.0,))


class TestWeightSearch:
    def toy_matrices(self):
        # method A ranks every partner first but with a 0.02 margin; method B
        # prefers the wrong candidate so strongly that any 10% of it flips A
        transcriptions = {0: "a", 1: "a", 2: "b", 3: "b"}
        qids = [0, 1, 2, 3]
        good = np.array([
            [0.0, 0.50, 0.52, 1.0],
            [0.50, 0.0, 0.52, 1.0],
            [0.52, 1.0, 0.0, 0.50],
            [0.52, 1.0, 0.50, 0.0],
        ])
        noise = np.array([
            [0.0, 1.0, 0.2, 0.5],
            [1.0, 0.0, 0.2, 0.5],
            [0.2, 0.5, 0.0, 1.0],
            [0.2, 0.5, 1.0, 0.0],
        ])
        return (DistanceMatrix(qids, qids, good), DistanceMatrix(qids, qids, noise),
                transcriptions)

    def test_dominant_method_gets_full_weight(self):
        good, noise, transcriptions = self.toy_matrices()
        weights = weight_search([good, noise], transcriptions)
        assert weights.values == (1.0, 0.0)

    def test_identical_matrices_tie_resolves_lexicographically(self):
        good, _, transcriptions = self.toy_matrices()
        weights = weight_search([good, good], transcriptions)
        assert weights.values == (0.0, 1.0)

    def test_three_methods_match_exhaustive_reevaluation(self):
        rng = np.random.default_rng(13)
        transcriptions = {i: f"w{i % 2}" for i in range(4)}
        qids = list(range(4))
        mats = [DistanceMatrix(qids, qids, rng.random((4, 4))) for _ in range(3)]
        found = weight_search(mats, transcriptions)
        # independent re-evaluation of every grid point
        best = None
        for combo in itertools.product(range(11), repeat=3):
            if sum(combo) != 10:
                continue
            w = tuple(k / 10 for k in combo)
            fused = fuse_distances(mats, FusionWeights(w))
            aps = per_query_average_precision(fused, transcriptions)
            score = sum(aps.values()) / len(aps)
            if best is None or score > best[0]:
                best = (score, w)
        fused = fuse_distances(mats, found)
        aps = per_query_average_precision(fused, transcriptions)
        assert sum(aps.values()) / len(aps) == pytest.approx(best[0], abs=1e-12)


class TestSegmentationQuality:
    def test_exact_proposals_score_one(self):
        boxes = {"p": [BoundingBox(0, 0, 10, 10), BoundingBox(20, 0, 30, 10)]}
        profile = segmentation_quality(boxes, boxes)
        assert np.all(profile.gt_best == 1.0)
        assert np.all(profile.proposal_best == 1.0)
        assert profile.gt_stats.median == 1.0

    def test_no_proposals(self):
        gt = {"p": [BoundingBox(0, 0, 10, 10)]}
        profile = segmentation_quality(gt, {})
        assert profile.gt_best.tolist() == [0.0]
        assert profile.proposal_best.size == 0
        assert profile.proposal_stats is None

    def test_toy_page_matches_pairwise_loop(self):
        from segspot.core import iou
        gt = {"p": [BoundingBox(0, 0, 10, 10), BoundingBox(20, 0, 28, 12)]}
        props = {"p": [BoundingBox(1, 1, 11, 11), BoundingBox(19, 0, 27, 12),
                       BoundingBox(50, 50, 60, 55)]}
        profile = segmentation_quality(gt, props)
        expected = np.zeros((2, 3))
        for i, g in enumerate(gt["p"]):
            for j, p in enumerate(props["p"]):
                expected[i, j] = iou(g, p)
        assert np.allclose(profile.page_matrices["p"], expected)
        assert np.allclose(profile.gt_best, expected.max(axis=1))
        assert np.allclose(profile.proposal_best, expected.max(axis=0))

    def test_cross_page_boxes_never_match(self):
        gt = {"p1": [BoundingBox(0, 0, 10, 10)]}
        props = {"p2": [BoundingBox(0, 0, 10, 10)]}
        profile = segmentation_quality(gt, props)
        assert profile.gt_best.tolist() == [0.0]
        assert profile.proposal_best.tolist() == [0.0]

    def test_proposal_order_invariance(self):
        rng = np.random.default_rng(19)
        gt = {"p": [BoundingBox(i * 20, 0, i * 20 + 15, 12) for i in range(4)]}
        lefts = rng.integers(0, 70, 6)
        props = [BoundingBox(int(l), 0, int(l) + 14, 12) for l in lefts]
        a = segmentation_quality(gt, {"p": props})
        b = segmentation_quality(gt, {"p": list(reversed(props))})
        assert np.allclose(np.sort(a.proposal_best), np.sort(b.proposal_best))
        assert np.allclose(a.gt_best, b.gt_best)


class TestAnalysisIO:
    def test_independence_matrix_round_trip(self, tmp_path):
        names = ["lbp", "hog", "dtw"]
        matrix = np.array([[0.0, 0.3, 0.5], [0.3, 0.0, 0.4], [0.5, 0.4, 0.0]])
        path = tmp_path / "ind.csv"
        write_independence_matrix(path, names, matrix)
        back_names, back = read_independence_matrix(path)
        assert back_names == names
        assert np.array_equal(back, matrix)

    def test_segquality_files(self, tmp_path):
        gt = {"p": [BoundingBox(0, 0, 10, 10), BoundingBox(20, 0, 30, 10)]}
        profile = segmentation_quality(gt, gt)
        summary = tmp_path / "s.csv"
        maxima = tmp_path / "m.csv"
        write_segquality(summary, maxima, profile)
        lines = summary.read_text().splitlines()
        assert lines[0] == "axis,stat,value"
        assert len([l for l in lines[1:] if l.startswith("gt_best")]) == 6
        data = maxima.read_text().splitlines()
        assert data[0] == "axis,value"
        assert len(data) == 1 + 4
