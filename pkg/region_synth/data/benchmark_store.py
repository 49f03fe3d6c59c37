import json
import os

import torch

from region_synth.data.data_models import Benchmark, ClassSpec, FeatureBatch
from region_synth.data.feature_io import (
    load_features,
    load_semantic_vectors,
    load_split,
    save_features,
    save_semantic_vectors,
    save_split,
)
from region_synth.errors import DataError, MalformedFileError

MANIFEST = "manifest.json"
MANIFEST_VERSION = 1
FEATURE_FILES = {
    "seen_train": "seen_train.rsf",
    "proposals": "proposals.rsf",
    "background": "background.rsf",
    "seen_test": "seen_test.rsf",
    "unseen_test": "unseen_test.rsf",
    "class_means": "class_means.rsf",
}
SEMANTIC_FILE = "semantic_vectors.csv"
SPLIT_FILE = "split.csv"


def save_benchmark(benchmark: Benchmark, out_dir: str, settings: dict | None = None) -> dict:
    """Write every collection plus a manifest; returns the manifest."""
    os.makedirs(out_dir, exist_ok=True)
    specs = benchmark.seen + benchmark.unseen
    batches = {
        "seen_train": benchmark.seen_train,
        "proposals": benchmark.proposals,
        "background": benchmark.background,
        "seen_test": benchmark.seen_test,
        "unseen_test": benchmark.unseen_test,
        "class_means": FeatureBatch(
            features=torch.stack([s.mean for s in specs]),
            labels=torch.tensor([s.class_id for s in specs], dtype=torch.long),
        ),
    }
    for key, name in FEATURE_FILES.items():
        save_features(batches[key], os.path.join(out_dir, name))
    save_semantic_vectors(benchmark.semantic_vectors(), os.path.join(out_dir, SEMANTIC_FILE))
    save_split(benchmark.seen_ids, benchmark.unseen_ids, os.path.join(out_dir, SPLIT_FILE))

    manifest = {
        "format_version": MANIFEST_VERSION,
        "files": sorted(list(FEATURE_FILES.values()) + [SEMANTIC_FILE, SPLIT_FILE]),
        "classes": [
            {
                "class_id": s.class_id,
                "cov_scale": s.cov_scale,
                "train_count": s.train_count,
                "test_count": s.test_count,
            }
            for s in specs
        ],
        "settings": settings or {},
    }
    with open(os.path.join(out_dir, MANIFEST), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest


def load_benchmark(data_dir: str) -> Benchmark:
    manifest_path = os.path.join(data_dir, MANIFEST)
    if not os.path.exists(manifest_path):
        raise DataError(f"no benchmark manifest in {data_dir}")
    with open(manifest_path) as f:
        try:
            manifest = json.load(f)
        except json.JSONDecodeError as e:
            raise MalformedFileError(f"{manifest_path}: {e}") from e
    if manifest.get("format_version") != MANIFEST_VERSION:
        raise MalformedFileError(f"{manifest_path}: unknown manifest version {manifest.get('format_version')}")

    batches = {key: load_features(os.path.join(data_dir, name)) for key, name in FEATURE_FILES.items()}
    semantic = load_semantic_vectors(os.path.join(data_dir, SEMANTIC_FILE))
    seen_ids, unseen_ids = load_split(os.path.join(data_dir, SPLIT_FILE))
    means = dict(zip(batches["class_means"].labels.tolist(), batches["class_means"].features, strict=True))
    info = {c["class_id"]: c for c in manifest["classes"]}

    def spec(class_id: int) -> ClassSpec:
        if class_id not in semantic or class_id not in means or class_id not in info:
            raise MalformedFileError(f"{data_dir}: class {class_id} is missing from the benchmark files")
        return ClassSpec(
            class_id=class_id,
            semantic=semantic[class_id],
            mean=means[class_id],
            cov_scale=info[class_id]["cov_scale"],
            train_count=info[class_id]["train_count"],
            test_count=info[class_id]["test_count"],
        )

    return Benchmark(
        seen=[spec(c) for c in seen_ids],
        unseen=[spec(c) for c in unseen_ids],
        seen_train=batches["seen_train"],
        proposals=batches["proposals"],
        background=batches["background"],
        seen_test=batches["seen_test"],
        unseen_test=batches["unseen_test"],
    )
