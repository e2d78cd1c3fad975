"""Reading and writing the ground-truth text format and page images."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from .core import BoundingBox, Dataset, PageImage, WordSample

GT_COLUMNS = ("page_id", "left", "top", "right", "bottom", "transcription")
PAGE_EXTENSIONS = (".png", ".pgm", ".tif", ".tiff", ".jpg", ".jpeg", ".bmp")


class DataFormatError(ValueError):
    """A data file does not match its documented format."""


def read_ground_truth(path) -> list[WordSample]:
    """Parse one word per line: page_id, left, top, right, bottom, transcription.

    Tab separated, UTF-8, '#' starts a comment line. Sample ids are assigned
    by file order starting at 0.
    """
    samples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < len(GT_COLUMNS):
                raise DataFormatError(f"{path}: line {lineno}: expected "
                                      f"{len(GT_COLUMNS)} tab-separated fields, got {len(parts)}")
            page_id, l, t, r, b = parts[0], *parts[1:5]
            transcription = parts[5]
            try:
                box = BoundingBox(int(l), int(t), int(r), int(b))
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {lineno}: bad box: {exc}") from exc
            samples.append(WordSample(sample_id=len(samples), page_id=page_id,
                                      box=box, transcription=transcription))
    return samples


def read_boxes(path) -> list[tuple[str, BoundingBox]]:
    """Box-only variant of the ground-truth format: the transcription column is optional.

    Used for proposed segmentations, which carry no text.
    """
    boxes = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 5:
                raise DataFormatError(f"{path}: line {lineno}: expected at least 5 "
                                      f"tab-separated fields, got {len(parts)}")
            try:
                box = BoundingBox(int(parts[1]), int(parts[2]), int(parts[3]), int(parts[4]))
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {lineno}: bad box: {exc}") from exc
            boxes.append((parts[0], box))
    return boxes


def write_ground_truth(path, samples: Iterable[WordSample], header: str | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        for s in samples:
            if "\t" in s.transcription or "\n" in s.transcription:
                raise DataFormatError(f"sample {s.sample_id}: transcription contains a delimiter")
            fh.write(f"{s.page_id}\t{s.box.left}\t{s.box.top}\t{s.box.right}\t{s.box.bottom}"
                     f"\t{s.transcription}\n")


def load_page_image(pages_dir, page_id: str) -> PageImage:
    """Load <pages_dir>/<page_id>.<ext> as 8-bit grayscale."""
    pages_dir = Path(pages_dir)
    for ext in PAGE_EXTENSIONS:
        candidate = pages_dir / f"{page_id}{ext}"
        if candidate.exists():
            with Image.open(candidate) as img:
                pixels = np.asarray(img.convert("L"), dtype=np.uint8)
            return PageImage(page_id=page_id, pixels=pixels)
    raise DataFormatError(f"no page image for {page_id!r} under {pages_dir}")


def save_page_image(pages_dir, page: PageImage):
    pages_dir = Path(pages_dir)
    pages_dir.mkdir(parents=True, exist_ok=True)
    Image.fromarray(page.pixels, mode="L").save(pages_dir / f"{page.page_id}.png")


def load_dataset(name: str, ground_truth, pages_dir) -> Dataset:
    """Assemble a Dataset from a ground-truth file and a directory of page images.

    Page order follows first appearance in the ground-truth file, which is the
    document order used for partitioning.
    """
    samples = read_ground_truth(ground_truth)
    if not samples:
        raise DataFormatError(f"{ground_truth}: no word samples")
    page_ids = []
    for s in samples:
        if s.page_id not in page_ids:
            page_ids.append(s.page_id)
    pages = [load_page_image(pages_dir, pid) for pid in page_ids]
    return Dataset(name=name, pages=pages, samples=samples)


def write_distorted_boxes(path, samples: Sequence[WordSample], boxes, achieved_iou,
                          level: float, seed: int):
    """Serialize a distorted database in the ground-truth format plus achieved_iou.

    Rows keep the order of `samples` so they pair positionally with the source
    test partition.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# level={level!r} seed={seed}\n")
        fh.write("# columns: page_id left top right bottom transcription achieved_iou\n")
        for s in samples:
            b = boxes[s.sample_id]
            fh.write(f"{s.page_id}\t{b.left}\t{b.top}\t{b.right}\t{b.bottom}"
                     f"\t{s.transcription}\t{achieved_iou[s.sample_id]!r}\n")


def read_distorted_boxes(path):
    """Return (level, seed, rows); rows are (page_id, BoundingBox, transcription, achieved_iou)."""
    level = seed = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.lstrip().startswith("#"):
                stripped = line.lstrip("# ").strip()
                if stripped.startswith("level="):
                    head = dict(part.split("=", 1) for part in stripped.split())
                    level = float(head["level"])
                    seed = int(head["seed"])
                continue
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 7:
                raise DataFormatError(f"{path}: line {lineno}: expected 7 fields, got {len(parts)}")
            box = BoundingBox(int(parts[1]), int(parts[2]), int(parts[3]), int(parts[4]))
            rows.append((parts[0], box, parts[5], float(parts[6])))
    if level is None:
        raise DataFormatError(f"{path}: missing '# level=... seed=...' header line")
    return level, seed, rows
