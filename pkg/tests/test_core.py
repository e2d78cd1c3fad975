import numpy as np
import pytest

from segspot.core import (BACKGROUND, BoundingBox, Dataset, PageImage, WordSample,
                          binarize, crop, iou, otsu_threshold, partition_pages, query_set)


def box(l, t, r, b):
    return BoundingBox(l, t, r, b)


class TestIoU:
    def test_identity(self):
        a = box(0, 0, 100, 50)
        assert iou(a, a) == 1.0

    def test_disjoint(self):
        assert iou(box(0, 0, 10, 10), box(20, 20, 30, 30)) == 0.0

    def test_known_overlap(self):
        # overlap 80x50 = 4000, union 2*5000 - 4000 = 6000
        a = box(0, 0, 100, 50)
        b = box(20, 0, 120, 50)
        assert iou(a, b) == pytest.approx(4000 / 6000, abs=1e-12)

    def test_symmetry_random(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            l1, t1 = rng.integers(-50, 50, 2)
            l2, t2 = rng.integers(-50, 50, 2)
            a = box(l1, t1, l1 + rng.integers(1, 80), t1 + rng.integers(1, 80))
            b = box(l2, t2, l2 + rng.integers(1, 80), t2 + rng.integers(1, 80))
            assert iou(a, b) == iou(b, a)
            assert 0.0 <= iou(a, b) <= 1.0

    def test_monotone_under_translation(self):
        a = box(0, 0, 120, 40)
        prev = 1.0
        for t in range(0, 200, 5):
            cur = iou(a, a.translated(t, t // 3))
            assert cur <= prev + 1e-12
            prev = cur

    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError):
            box(10, 0, 10, 5)


class TestCrop:
    def page(self):
        pixels = np.arange(20 * 30, dtype=np.uint8).reshape(20, 30) % 200
        return PageImage("p", pixels)

    def test_inside(self):
        page = self.page()
        out = crop(page, box(5, 2, 12, 9))
        assert np.array_equal(out, page.pixels[2:9, 5:12])

    def test_pads_left_edge(self):
        page = self.page()
        out = crop(page, box(-4, 0, 4, 5))
        assert np.all(out[:, :4] == BACKGROUND)
        assert np.array_equal(out[:, 4:], page.pixels[0:5, 0:4])

    def test_full_page(self):
        page = self.page()
        assert np.array_equal(crop(page, box(0, 0, 30, 20)), page.pixels)

    def test_fully_outside_is_error(self):
        with pytest.raises(ValueError, match="empty crop"):
            crop(self.page(), box(100, 100, 110, 110))


def brute_force_otsu(image):
    """Exhaustive threshold search maximizing between-class variance."""
    values = image.ravel().astype(np.float64)
    best_t, best_var = 0, -1.0
    for t in range(256):
        lo = values[values <= t]
        hi = values[values > t]
        if lo.size == 0 or hi.size == 0:
            var = 0.0
        else:
            w0 = lo.size / values.size
            w1 = hi.size / values.size
            var = w0 * w1 * (lo.mean() - hi.mean()) ** 2
        if var > best_var:
            best_t, best_var = t, var
    return best_t


class TestBinarize:
    def test_all_white(self):
        img = np.full((10, 10), 255, dtype=np.uint8)
        assert binarize(img).sum() == 0

    def test_half_black_half_white(self):
        img = np.full((10, 10), 255, dtype=np.uint8)
        img[:, :5] = 0
        mask = binarize(img)
        assert mask[:, :5].all() and not mask[:, 5:].any()

    def test_bimodal_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            img = np.where(rng.random((24, 24)) < 0.4,
                           rng.integers(20, 60, (24, 24)),
                           rng.integers(170, 230, (24, 24))).astype(np.uint8)
            t = otsu_threshold(img)
            assert t == brute_force_otsu(img)
            assert np.array_equal(binarize(img), img <= t)

    def test_constant_is_all_background(self):
        for value in (0, 128, 255):
            img = np.full((6, 6), value, dtype=np.uint8)
            assert binarize(img).sum() == 0


def tiny_dataset(n_pages, samples_per_page=3):
    pages = []
    samples = []
    for p in range(n_pages):
        pid = f"pg{p}"
        pages.append(PageImage(pid, np.full((50, 80), 240, dtype=np.uint8)))
        for k in range(samples_per_page):
            samples.append(WordSample(len(samples), pid,
                                      BoundingBox(5 + 20 * k, 5, 20 + 20 * k, 25),
                                      f"word{k}"))
    return Dataset("tiny", pages, samples)


class TestPartition:
    @pytest.mark.parametrize("n_pages,expected_train", [(20, 15), (40, 30), (4, 3)])
    def test_page_counts(self, n_pages, expected_train):
        ds = tiny_dataset(n_pages)
        part = partition_pages(ds)
        train_pages = {ds.sample(i).page_id for i in part.train}
        test_pages = {ds.sample(i).page_id for i in part.test}
        assert len(train_pages) == expected_train
        assert len(test_pages) == n_pages - expected_train

    def test_no_page_split_across_sides(self):
        ds = tiny_dataset(8)
        part = partition_pages(ds)
        train_pages = {ds.sample(i).page_id for i in part.train}
        test_pages = {ds.sample(i).page_id for i in part.test}
        assert not (train_pages & test_pages)
        assert set(part.train) | set(part.test) == {s.sample_id for s in ds.samples}
        assert not (set(part.train) & set(part.test))

    def test_single_page_is_error(self):
        with pytest.raises(ValueError):
            partition_pages(tiny_dataset(1))

    def test_two_pages_keeps_test_side(self):
        part = partition_pages(tiny_dataset(2))
        assert part.train and part.test


class TestQuerySet:
    def make(self, transcriptions):
        page = PageImage("p", np.full((40, 200), 240, dtype=np.uint8))
        samples = [WordSample(i, "p", BoundingBox(2 + 9 * i, 2, 10 + 9 * i, 12), t)
                   for i, t in enumerate(transcriptions)]
        return samples

    def test_pairs_only(self):
        samples = self.make(["the", "the", "and"])
        assert query_set(samples) == [0, 1]

    def test_all_unique_gives_empty(self):
        assert query_set(self.make(["a", "b", "c"])) == []

    def test_case_insensitive(self):
        samples = self.make(["Fort", "fort", "FORT"])
        assert query_set(samples) == [0, 1, 2]

    def test_every_query_has_a_match_besides_itself(self):
        rng = np.random.default_rng(11)
        words = [f"w{rng.integers(0, 6)}" for _ in range(40)]
        samples = self.make(words)
        qs = query_set(samples)
        assert set(qs) <= {s.sample_id for s in samples}
        by_word = {}
        for s in samples:
            by_word.setdefault(s.transcription.casefold(), []).append(s.sample_id)
        for qid in qs:
            word = samples[qid].transcription.casefold()
            assert len(by_word[word]) >= 2


class TestDatasetValidation:
    def test_unknown_page_rejected(self):
        page = PageImage("p", np.zeros((10, 10), dtype=np.uint8))
        sample = WordSample(0, "other", BoundingBox(0, 0, 5, 5), "x")
        with pytest.raises(ValueError, match="unknown page"):
            Dataset("d", [page], [sample])

    def test_out_of_page_box_rejected(self):
        page = PageImage("p", np.zeros((10, 10), dtype=np.uint8))
        sample = WordSample(0, "p", BoundingBox(50, 50, 60, 60), "x")
        with pytest.raises(ValueError, match="outside page"):
            Dataset("d", [page], [sample])

    def test_empty_transcription_rejected(self):
        with pytest.raises(ValueError, match="empty transcription"):
            WordSample(0, "p", BoundingBox(0, 0, 5, 5), "")
