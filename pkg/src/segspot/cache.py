"""Binary cache files for descriptors (fixed-dim) and column profiles (variable-length)."""

from __future__ import annotations

import struct

import numpy as np

_MAGIC_FIXED = b"SSPD"
_MAGIC_VAR = b"SSPV"


def write_feature_matrix(path, tag: str, ids, matrix: np.ndarray):
    """Header (tag, dimension, count), id index block, then row-major float32 data."""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    ids = np.ascontiguousarray(ids, dtype="<i8")
    if matrix.ndim != 2 or matrix.shape[0] != ids.shape[0]:
        raise ValueError("matrix rows must match the id list")
    tag_bytes = tag.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sI", _MAGIC_FIXED, len(tag_bytes)))
        fh.write(tag_bytes)
        fh.write(struct.pack("<II", matrix.shape[1], matrix.shape[0]))
        fh.write(ids.tobytes())
        fh.write(matrix.tobytes())


def read_feature_matrix(path):
    with open(path, "rb") as fh:
        magic, tag_len = struct.unpack("<4sI", fh.read(8))
        if magic != _MAGIC_FIXED:
            raise ValueError(f"{path}: not a descriptor cache file")
        tag = fh.read(tag_len).decode("utf-8")
        dim, count = struct.unpack("<II", fh.read(8))
        ids = np.frombuffer(fh.read(8 * count), dtype="<i8")
        data = np.frombuffer(fh.read(4 * dim * count), dtype="<f4")
    if ids.shape[0] != count or data.shape[0] != dim * count:
        raise ValueError(f"{path}: truncated descriptor cache")
    return tag, ids.astype(np.int64), data.reshape(count, dim).astype(np.float64)


def write_sequences(path, tag: str, ids, sequences):
    """Variable-length float32 sequences, one per id, with a length index block."""
    ids = np.ascontiguousarray(ids, dtype="<i8")
    if len(sequences) != ids.shape[0]:
        raise ValueError("sequence count must match the id list")
    arrays = [np.ascontiguousarray(seq, dtype="<f4") for seq in sequences]
    feat = arrays[0].shape[1] if arrays else 0
    for a in arrays:
        if a.ndim != 2 or a.shape[1] != feat:
            raise ValueError("all sequences must share the same feature width")
    lengths = np.array([a.shape[0] for a in arrays], dtype="<u4")
    tag_bytes = tag.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sI", _MAGIC_VAR, len(tag_bytes)))
        fh.write(tag_bytes)
        fh.write(struct.pack("<II", feat, ids.shape[0]))
        fh.write(ids.tobytes())
        fh.write(lengths.tobytes())
        for a in arrays:
            fh.write(a.tobytes())


def read_sequences(path):
    with open(path, "rb") as fh:
        magic, tag_len = struct.unpack("<4sI", fh.read(8))
        if magic != _MAGIC_VAR:
            raise ValueError(f"{path}: not a sequence cache file")
        tag = fh.read(tag_len).decode("utf-8")
        feat, count = struct.unpack("<II", fh.read(8))
        ids = np.frombuffer(fh.read(8 * count), dtype="<i8")
        lengths = np.frombuffer(fh.read(4 * count), dtype="<u4")
        sequences = []
        for n in lengths:
            raw = fh.read(4 * feat * int(n))
            seq = np.frombuffer(raw, dtype="<f4")
            if seq.shape[0] != feat * int(n):
                raise ValueError(f"{path}: truncated sequence cache")
            sequences.append(seq.reshape(int(n), feat).astype(np.float64))
    if ids.shape[0] != count:
        raise ValueError(f"{path}: truncated sequence cache")
    return tag, ids.astype(np.int64), sequences
