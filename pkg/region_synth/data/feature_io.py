"""
Feature, semantic-vector and split files.

Binary feature files (canonical, bit-exact)::

    magic b"RSFT" | version u16 | count u32 | d_f u32 | has_labels u8     (little-endian)
    count * d_f float64                                                     (row-major)
    count int32 labels                                                      (if has_labels)

CSV feature files have a header row ``label,f0,...`` (or ``f0,...`` without labels).
"""

import csv
import os
import struct

import numpy as np
import torch

from region_synth.data.data_models import FeatureBatch
from region_synth.errors import DataError, MalformedFileError

MAGIC = b"RSFT"
FEATURE_FILE_VERSION = 1
_HEADER = struct.Struct("<4sHIIB")


def _is_csv(path: str) -> bool:
    return str(path).lower().endswith(".csv")


def _read_bytes(path: str) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except FileNotFoundError as e:
        raise DataError(f"file not found: {path}") from e


def save_features(batch: FeatureBatch, path: str) -> None:
    if _is_csv(path):
        _save_features_csv(batch, path)
        return
    features = batch.features.detach().cpu().numpy().astype("<f8", copy=False)
    has_labels = batch.labels is not None
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, FEATURE_FILE_VERSION, features.shape[0], features.shape[1], int(has_labels)))
        f.write(np.ascontiguousarray(features).tobytes())
        if has_labels:
            f.write(batch.labels.cpu().numpy().astype("<i4").tobytes())


def load_features(path: str, expected_d_f: int | None = None) -> FeatureBatch:
    batch = _load_features_csv(path) if _is_csv(path) else _load_features_binary(path)
    if expected_d_f is not None and batch.d_f != expected_d_f:
        raise MalformedFileError(f"{path}: expected feature width {expected_d_f}, found {batch.d_f}")
    return batch


def _load_features_binary(path: str) -> FeatureBatch:
    raw = _read_bytes(path)
    if len(raw) < _HEADER.size:
        raise MalformedFileError(f"{path}: truncated header")
    magic, version, count, d_f, has_labels = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise MalformedFileError(f"{path}: not a feature file")
    if version != FEATURE_FILE_VERSION:
        raise MalformedFileError(f"{path}: unknown feature file version {version}")
    if has_labels not in (0, 1) or d_f == 0:
        raise MalformedFileError(f"{path}: malformed header")
    body = count * d_f * 8
    expected = _HEADER.size + body + (count * 4 if has_labels else 0)
    if len(raw) != expected:
        raise MalformedFileError(f"{path}: expected {expected} bytes, found {len(raw)}")
    features = np.frombuffer(raw, dtype="<f8", count=count * d_f, offset=_HEADER.size)
    labels = None
    if has_labels:
        labels_np = np.frombuffer(raw, dtype="<i4", count=count, offset=_HEADER.size + body)
        labels = torch.from_numpy(labels_np.astype(np.int64))
    return FeatureBatch(
        features=torch.from_numpy(features.reshape(count, d_f).astype(np.float64)), labels=labels
    )


def _save_features_csv(batch: FeatureBatch, path: str) -> None:
    features = batch.features.detach().cpu().numpy()
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        columns = [f"f{k}" for k in range(features.shape[1])]
        writer.writerow((["label"] if batch.labels is not None else []) + columns)
        for i, row in enumerate(features):
            values = [repr(float(v)) for v in row]
            if batch.labels is not None:
                values.insert(0, str(int(batch.labels[i])))
            writer.writerow(values)


def _load_features_csv(path: str) -> FeatureBatch:
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise MalformedFileError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    has_labels = bool(header) and header[0] == "label"
    width = len(header)
    if width - int(has_labels) < 1:
        raise MalformedFileError(f"{path}: header has no feature columns")
    try:
        values = np.array([[float(v) for v in row] for row in body if row], dtype=np.float64)
    except ValueError as e:
        raise MalformedFileError(f"{path}: {e}") from e
    if any(len(row) != width for row in body if row):
        raise MalformedFileError(f"{path}: rows do not match the header width {width}")
    values = values.reshape(-1, width)
    labels = torch.from_numpy(values[:, 0].astype(np.int64)) if has_labels else None
    features = torch.from_numpy(np.ascontiguousarray(values[:, int(has_labels) :]))
    return FeatureBatch(features=features, labels=labels)


def save_semantic_vectors(vectors: dict[int, torch.Tensor], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        for class_id in sorted(vectors):
            writer.writerow([class_id] + [repr(float(v)) for v in vectors[class_id]])


def load_semantic_vectors(path: str, normalize: bool = False) -> dict[int, torch.Tensor]:
    """One row per class: ``id, v0, ..., v{D_w-1}``. An optional non-numeric header row is skipped."""
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    with open(path, newline="") as f:
        rows = [row for row in csv.reader(f) if row]
    vectors: dict[int, torch.Tensor] = {}
    width = None
    for lineno, row in enumerate(rows, start=1):
        try:
            class_id = int(row[0])
            values = [float(v) for v in row[1:]]
        except ValueError as e:
            if lineno == 1:
                continue
            raise MalformedFileError(f"{path}:{lineno}: {e}") from e
        if class_id in vectors:
            raise MalformedFileError(f"{path}:{lineno}: duplicate class id {class_id}")
        if width is None:
            width = len(values)
        if len(values) != width or width == 0:
            raise MalformedFileError(f"{path}:{lineno}: expected {width} values, found {len(values)}")
        vector = torch.tensor(values, dtype=torch.float64)
        if normalize:
            norm = torch.linalg.vector_norm(vector)
            if float(norm) == 0.0:
                raise MalformedFileError(f"{path}:{lineno}: class {class_id} has an all-zero vector; cannot normalize")
            vector = vector / norm
        vectors[class_id] = vector
    return vectors


def save_split(seen_ids: list[int], unseen_ids: list[int], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["class_id", "role"])
        writer.writerows([[c, "seen"] for c in seen_ids] + [[c, "unseen"] for c in unseen_ids])


def load_split(path: str) -> tuple[list[int], list[int]]:
    """Read a ``class_id,role`` file; roles are ``seen`` or ``unseen``."""
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    seen, unseen = [], []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            try:
                class_id = int(row["class_id"])
                role = row["role"].strip()
            except (KeyError, TypeError, ValueError) as e:
                raise MalformedFileError(f"{path}: bad split row {row}") from e
            if role not in ("seen", "unseen"):
                raise MalformedFileError(f"{path}: unknown role {role!r}")
            (seen if role == "seen" else unseen).append(class_id)
    if set(seen) & set(unseen):
        raise MalformedFileError(f"{path}: classes {sorted(set(seen) & set(unseen))} are both seen and unseen")
    return seen, unseen
