"""Deterministic synthetic word-image dataset for desk-scale experiments.

Each transcription class owns a stroke layout; samples of the class render the
layout with small jitter and per-sample paper noise, so same-class crops look
alike while every image stays unique. Pages carry a fixed grid of words, with
the same class mix on every page so the test partition keeps usable queries.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import BoundingBox, Dataset, PageImage, WordSample
from .dataset_io import save_page_image, write_ground_truth

_KEY_CLASS, _KEY_PAGE, _KEY_SAMPLE = 1, 2, 3

_MARGIN = 70
_CELL_W, _CELL_H = 270, 80
_COLS, _ROWS = 4, 6


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence((seed, *key)))


def _class_layout(rng):
    strokes = []
    for _ in range(int(rng.integers(4, 9))):
        strokes.append((
            int(rng.integers(0, 4)),          # vertical / horizontal / two diagonals
            float(rng.uniform(0.05, 0.80)),   # x anchor fraction
            float(rng.uniform(0.05, 0.55)),   # y anchor fraction
            float(rng.uniform(0.30, 0.85)),   # length fraction
            int(rng.integers(2, 5)),          # thickness
        ))
    base_w = int(rng.integers(185, 221))
    base_h = int(rng.integers(44, 58))
    return strokes, base_w, base_h


def _draw_stroke(patch, kind, x0f, y0f, lenf, thick, rng):
    h, w = patch.shape
    ink = int(rng.integers(15, 70))
    x0 = int(x0f * w) + int(rng.integers(-2, 3))
    y0 = int(y0f * h) + int(rng.integers(-2, 3))
    x0 = min(max(x0, 0), w - 1)
    y0 = min(max(y0, 0), h - 1)
    if kind == 0:
        y1 = min(h, y0 + max(2, int(lenf * h)))
        patch[y0:y1, x0:min(w, x0 + thick)] = ink
    elif kind == 1:
        x1 = min(w, x0 + max(2, int(lenf * w)))
        patch[y0:min(h, y0 + thick), x0:x1] = ink
    else:
        rise = max(2, int(lenf * h * 0.8))
        run = max(2, int(lenf * w * 0.35))
        slope = (run if kind == 2 else -run) / rise
        for step in range(rise):
            y = y0 + step
            if y >= h:
                break
            x = x0 + int(step * slope)
            x = min(max(x, 0), w - 1)
            patch[y, x:min(w, x + thick)] = ink


def _render_word(layout, rng):
    strokes, base_w, base_h = layout
    w = base_w + int(rng.integers(-4, 5))
    h = base_h + int(rng.integers(-3, 4))
    patch = rng.integers(234, 252, (h, w)).astype(np.uint8)
    for stroke in strokes:
        _draw_stroke(patch, *stroke, rng)
    return patch


def _case_variant(word, rng):
    pick = int(rng.integers(0, 3))
    if pick == 0:
        return word
    if pick == 1:
        return word.capitalize()
    return word.upper()


def build_dataset(n_classes: int = 12, per_class_per_page: int = 2, n_pages: int = 4,
                  seed: int = 20240, name: str = "synthetic") -> Dataset:
    if n_classes * per_class_per_page > _COLS * _ROWS:
        raise ValueError("class mix does not fit the page grid")
    layouts = [_class_layout(_rng(seed, _KEY_CLASS, c)) for c in range(n_classes)]
    page_w = 2 * _MARGIN + _COLS * _CELL_W
    page_h = 2 * _MARGIN + _ROWS * _CELL_H
    pages = []
    samples = []
    for p in range(n_pages):
        page_rng = _rng(seed, _KEY_PAGE, p)
        canvas = page_rng.integers(233, 252, (page_h, page_w)).astype(np.uint8)
        order = np.repeat(np.arange(n_classes), per_class_per_page)
        page_rng.shuffle(order)
        page_id = f"page{p:02d}"
        for slot, cls in enumerate(order):
            row, col = divmod(slot, _COLS)
            sample_rng = _rng(seed, _KEY_SAMPLE, p, slot)
            patch = _render_word(layouts[cls], sample_rng)
            ph, pw = patch.shape
            x = _MARGIN + col * _CELL_W + int(sample_rng.integers(0, 9))
            y = _MARGIN + row * _CELL_H + int(sample_rng.integers(0, 5))
            canvas[y:y + ph, x:x + pw] = patch
            samples.append(WordSample(
                sample_id=len(samples),
                page_id=page_id,
                box=BoundingBox(x, y, x + pw, y + ph),
                transcription=_case_variant(f"glyph{cls:02d}", sample_rng),
            ))
        pages.append(PageImage(page_id=page_id, pixels=canvas))
    return Dataset(name=name, pages=pages, samples=samples)


def write_dataset(target_dir, dataset: Dataset):
    """Materialize pages/*.png and gt.tsv under target_dir; returns (gt_path, pages_dir)."""
    target_dir = Path(target_dir)
    pages_dir = target_dir / "pages"
    pages_dir.mkdir(parents=True, exist_ok=True)
    for page in dataset.pages:
        save_page_image(pages_dir, page)
    gt_path = target_dir / "gt.tsv"
    write_ground_truth(gt_path, dataset.samples,
                       header="columns: page_id left top right bottom transcription")
    return gt_path, pages_dir
