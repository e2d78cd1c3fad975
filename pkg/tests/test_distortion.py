import math

import numpy as np
import pytest

from segspot.core import BoundingBox, iou
from segspot.distortion import (DEFAULT_LEVELS, DistortionSpec, displacement_for_iou,
                                distort_box, generate_distorted_database,
                                generate_distorted_databases, translated_iou)


def rng_for(seed):
    return np.random.default_rng(seed)


def axis_aligned_oracle(w, h, target):
    """Closed-form translation length along +x hitting the target IoU.

    Solves (w - t) * h = target * (2*w*h - (w - t) * h) for t.
    """
    inter = 2.0 * w * h * target / (1.0 + target)
    return w - inter / h


class TestDisplacementSolver:
    def test_target_one_is_zero(self):
        assert displacement_for_iou(BoundingBox(0, 0, 100, 50), 0.7, 1.0) == 0.0

    def test_closed_form_half(self):
        t = displacement_for_iou(BoundingBox(0, 0, 100, 50), 0.0, 0.5)
        assert t == pytest.approx(100 / 3, abs=1e-6)
        assert t == pytest.approx(axis_aligned_oracle(100, 50, 0.5), abs=1e-6)

    def test_closed_form_two_thirds(self):
        # matches the 80x50 overlap worked example: IoU 4000/6000
        t = displacement_for_iou(BoundingBox(0, 0, 100, 50), 0.0, 4000 / 6000)
        assert t == pytest.approx(20.0, abs=1e-6)

    def test_axis_aligned_oracle_random(self):
        rng = rng_for(5)
        for _ in range(200):
            w = int(rng.integers(10, 400))
            h = int(rng.integers(10, 200))
            target = float(rng.uniform(0.05, 0.99))
            t = displacement_for_iou(BoundingBox(0, 0, w, h), 0.0, target)
            assert t == pytest.approx(axis_aligned_oracle(w, h, target), abs=1e-5)

    def test_arbitrary_direction_hits_target(self):
        rng = rng_for(6)
        for _ in range(300):
            w = int(rng.integers(10, 400))
            h = int(rng.integers(10, 200))
            box = BoundingBox(0, 0, w, h)
            direction = float(rng.uniform(0, 2 * math.pi))
            target = float(rng.uniform(0.05, 1.0))
            t = displacement_for_iou(box, direction, target)
            achieved = translated_iou(box, t * math.cos(direction), t * math.sin(direction))
            assert achieved == pytest.approx(target, abs=1e-3)

    def test_target_zero_rejected(self):
        with pytest.raises(ValueError):
            displacement_for_iou(BoundingBox(0, 0, 10, 10), 0.0, 0.0)


class TestDistortBox:
    def test_target_one_identity(self):
        box = BoundingBox(7, 9, 150, 60)
        assert distort_box(box, 1.0, rng_for(0)) == box

    def test_deterministic_for_fixed_seed(self):
        box = BoundingBox(0, 0, 200, 60)
        a = distort_box(box, 0.4, rng_for(42))
        b = distort_box(box, 0.4, rng_for(42))
        assert a == b

    def test_preserves_size(self):
        rng = rng_for(1)
        box = BoundingBox(10, 10, 240, 70)
        for target in (0.1, 0.35, 0.8):
            moved = distort_box(box, target, rng)
            assert moved.width == box.width and moved.height == box.height

    def test_thousand_random_triples_within_tolerance(self):
        # boxes wide enough that the integer grid can always reach +/-0.005
        rng = rng_for(99)
        worst = 0.0
        for _ in range(1000):
            w = int(rng.integers(220, 420))
            h = int(rng.integers(30, 150))
            left = int(rng.integers(-50, 400))
            top = int(rng.integers(-50, 400))
            box = BoundingBox(left, top, left + w, top + h)
            target = float(rng.uniform(0.05, 1.0))
            moved = distort_box(box, target, rng)
            worst = max(worst, abs(iou(box, moved) - target))
        assert worst <= 0.005, f"worst deviation {worst}"


class TestGenerateDatabases:
    def samples(self, n=6):
        from segspot.core import WordSample
        rng = rng_for(3)
        out = []
        for i in range(n):
            left = int(rng.integers(0, 300))
            top = int(rng.integers(0, 300))
            out.append(WordSample(i, "p0", BoundingBox(left, top, left + 250, top + 50),
                                  f"w{i % 3}"))
        return out

    def test_level_one_is_ground_truth(self):
        db = generate_distorted_database(self.samples(), 1.0, seed=11)
        for s in self.samples():
            assert db.boxes[s.sample_id] == s.box
            assert db.achieved_iou[s.sample_id] == 1.0

    def test_reproducible_and_order_independent(self):
        samples = self.samples()
        a = generate_distorted_database(samples, 0.5, seed=11)
        b = generate_distorted_database(list(reversed(samples)), 0.5, seed=11)
        assert a.boxes == b.boxes
        assert a.achieved_iou == b.achieved_iou

    def test_one_database_per_level(self):
        spec = DistortionSpec(seed=5, levels=(0.25, 0.5, 1.0))
        dbs = generate_distorted_databases(self.samples(), spec)
        assert [db.level for db in dbs] == [0.25, 0.5, 1.0]
        for db in dbs:
            assert set(db.boxes) == {s.sample_id for s in self.samples()}

    def test_achieved_iou_recorded_within_tolerance(self):
        spec = DistortionSpec(seed=5, levels=(0.2, 0.6, 0.9))
        for db in generate_distorted_databases(self.samples(), spec):
            for sid, value in db.achieved_iou.items():
                assert abs(value - db.level) <= 0.005

    def test_empty_test_set_rejected(self):
        with pytest.raises(ValueError):
            generate_distorted_databases([], DistortionSpec(seed=1, levels=(0.5,)))

    def test_default_levels_are_the_hundred_grid(self):
        assert len(DEFAULT_LEVELS) == 100
        assert DEFAULT_LEVELS[0] == 0.01
        assert DEFAULT_LEVELS[-1] == 1.0

    def test_levels_validated(self):
        with pytest.raises(ValueError):
            DistortionSpec(seed=1, levels=(0.5, 0.4))
        with pytest.raises(ValueError):
            DistortionSpec(seed=1, levels=(0.0, 0.5))
