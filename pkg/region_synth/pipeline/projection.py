import csv
import pathlib
from dataclasses import dataclass

import numpy as np
from sklearn.decomposition import PCA

from region_synth.data import FeatureBatch, Origin
from region_synth.errors import DataError

RAW_FILE = "features_raw.csv"
PCA_FILE = "features_pca.csv"


@dataclass
class ProjectionExport:
    raw_path: pathlib.Path
    pca_path: pathlib.Path
    explained_variance_ratio: float


def _stack(batches: list[tuple[FeatureBatch, Origin]]) -> tuple[np.ndarray, list[int], list[str]]:
    rows, labels, origins = [], [], []
    for batch, origin in batches:
        if len(batch) == 0:
            continue
        if batch.labels is None:
            raise DataError(f"{origin.value} features need labels to be exported")
        rows.append(batch.features.detach().double().numpy())
        labels += batch.labels.tolist()
        origins += [origin.value] * len(batch)
    if not rows:
        raise DataError("nothing to export")
    return np.concatenate(rows), labels, origins


def export_features(out_dir: str | pathlib.Path, synthesized: FeatureBatch, real: FeatureBatch) -> ProjectionExport:
    """
    Write synthesized and real features raw and projected onto their first two
    principal components, for plotting outside this package.

    Returns the share of total variance the two components keep.
    """
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    features, labels, origins = _stack([(synthesized, Origin.SYNTH), (real, Origin.REAL)])
    if features.shape[0] < 2 or features.shape[1] < 2:
        raise DataError(f"need at least 2 rows and 2 columns to project, got {features.shape}")

    pca = PCA(n_components=2, svd_solver="full")
    projected = pca.fit_transform(features)

    raw_path = out_dir / RAW_FILE
    with open(raw_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["label", "origin"] + [f"f{i}" for i in range(features.shape[1])])
        for label, origin, row in zip(labels, origins, features, strict=True):
            writer.writerow([label, origin] + [repr(float(v)) for v in row])

    pca_path = out_dir / PCA_FILE
    with open(pca_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["pc1", "pc2", "label", "origin"])
        for (pc1, pc2), label, origin in zip(projected, labels, origins, strict=True):
            writer.writerow([repr(float(pc1)), repr(float(pc2)), label, origin])

    return ProjectionExport(
        raw_path=raw_path,
        pca_path=pca_path,
        explained_variance_ratio=float(pca.explained_variance_ratio_.sum()),
    )
