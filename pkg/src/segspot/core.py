"""Dataset model, box geometry, cropping, binarization and partitioning."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

BACKGROUND = 255


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned rectangle in page pixel coordinates, right/bottom exclusive."""

    left: int
    top: int
    right: int
    bottom: int

    def __post_init__(self):
        if self.right <= self.left or self.bottom <= self.top:
            raise ValueError(f"degenerate box {(self.left, self.top, self.right, self.bottom)}")

    @property
    def width(self):
        return self.right - self.left

    @property
    def height(self):
        return self.bottom - self.top

    @property
    def area(self):
        return self.width * self.height

    def translated(self, dx: int, dy: int) -> "BoundingBox":
        return BoundingBox(self.left + dx, self.top + dy, self.right + dx, self.bottom + dy)

    def astuple(self):
        return (self.left, self.top, self.right, self.bottom)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes. Non-overlapping boxes score 0."""
    wi = min(a.right, b.right) - max(a.left, b.left)
    hi = min(a.bottom, b.bottom) - max(a.top, b.top)
    if wi <= 0 or hi <= 0:
        return 0.0
    inter = wi * hi
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True)
class WordSample:
    """One ground-truth word: its id, page, box and transcription."""

    sample_id: int
    page_id: str
    box: BoundingBox
    transcription: str

    def __post_init__(self):
        if not self.transcription:
            raise ValueError(f"sample {self.sample_id} has an empty transcription")


@dataclass
class PageImage:
    """A grayscale document page, 8-bit, indexed pixels[row, col]."""

    page_id: str
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"page {self.page_id!r} needs a non-empty 2-D pixel grid")
        if px.dtype != np.uint8:
            px = px.astype(np.uint8)
        self.pixels = px

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]


@dataclass
class Dataset:
    """Pages in document order plus the word samples they carry."""

    name: str
    pages: list[PageImage]
    samples: list[WordSample]
    _pages_by_id: dict = field(init=False, repr=False)
    _samples_by_id: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._pages_by_id = {p.page_id: p for p in self.pages}
        if len(self._pages_by_id) != len(self.pages):
            raise ValueError("duplicate page ids")
        self._samples_by_id = {}
        for s in self.samples:
            if s.sample_id in self._samples_by_id:
                raise ValueError(f"duplicate sample id {s.sample_id}")
            page = self._pages_by_id.get(s.page_id)
            if page is None:
                raise ValueError(f"sample {s.sample_id} references unknown page {s.page_id!r}")
            if (s.box.left >= page.width or s.box.right <= 0
                    or s.box.top >= page.height or s.box.bottom <= 0):
                raise ValueError(f"sample {s.sample_id} box lies entirely outside page {s.page_id!r}")
            self._samples_by_id[s.sample_id] = s

    def page(self, page_id: str) -> PageImage:
        return self._pages_by_id[page_id]

    def sample(self, sample_id: int) -> WordSample:
        return self._samples_by_id[sample_id]

    def samples_on_page(self, page_id: str) -> list[WordSample]:
        return [s for s in self.samples if s.page_id == page_id]


@dataclass(frozen=True)
class Partition:
    """Page-respecting train/test split, as lists of sample ids."""

    train: tuple[int, ...]
    test: tuple[int, ...]


def crop(page: PageImage, box: BoundingBox) -> np.ndarray:
    """Cut the box out of the page; parts outside the page are padded white."""
    h, w = page.pixels.shape
    if box.right <= 0 or box.left >= w or box.bottom <= 0 or box.top >= h:
        raise ValueError(f"empty crop: box {box.astuple()} lies outside page {page.page_id!r}")
    out = np.full((box.height, box.width), BACKGROUND, dtype=np.uint8)
    sl, st = max(box.left, 0), max(box.top, 0)
    sr, sb = min(box.right, w), min(box.bottom, h)
    out[st - box.top:sb - box.top, sl - box.left:sr - box.left] = page.pixels[st:sb, sl:sr]
    return out


def otsu_threshold(image: np.ndarray) -> int:
    """Gray level maximizing the between-class variance (first maximum on ties)."""
    hist = np.bincount(np.asarray(image, dtype=np.uint8).ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    omega0 = np.cumsum(hist) / total
    mu0_mass = np.cumsum(hist * np.arange(256)) / total
    mu_total = mu0_mass[-1]
    omega1 = 1.0 - omega0
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mu_total * omega0 - mu0_mass) ** 2 / (omega0 * omega1)
    between[~np.isfinite(between)] = 0.0
    return int(np.argmax(between))


def binarize(image: np.ndarray) -> np.ndarray:
    """Otsu-threshold a gray word image; True marks ink (dark) pixels."""
    image = np.asarray(image)
    if image.size == 0:
        raise ValueError("cannot binarize an empty image")
    if image.min() == image.max():
        return np.zeros(image.shape, dtype=bool)
    return image <= otsu_threshold(image)


def partition_pages(dataset: Dataset, train_fraction: float = 0.75) -> Partition:
    """Split at page boundaries, first ceil(train_fraction * pages) pages as train.

    The train side is capped at pages - 1 so the test side is never empty.
    """
    n_pages = len(dataset.pages)
    if n_pages < 2:
        raise ValueError("partitioning needs at least 2 pages")
    n_train = min(math.ceil(train_fraction * n_pages), n_pages - 1)
    train_ids = {p.page_id for p in dataset.pages[:n_train]}
    train = tuple(s.sample_id for s in dataset.samples if s.page_id in train_ids)
    test = tuple(s.sample_id for s in dataset.samples if s.page_id not in train_ids)
    return Partition(train=train, test=test)


def query_set(samples: Sequence[WordSample]) -> list[int]:
    """Ids of samples whose case-folded transcription occurs at least twice.

    Singleton transcriptions stay in the retrieval database as distractors but
    are never queried, so every query has a correct retrieval besides itself.
    """
    counts = Counter(s.transcription.casefold() for s in samples)
    return [s.sample_id for s in samples if counts[s.transcription.casefold()] >= 2]
