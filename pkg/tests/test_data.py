import dataclasses
import json
import math

import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from region_synth.data import (
    MANIFEST,
    BenchmarkConfig,
    FeatureBatch,
    generate_benchmark,
    load_benchmark,
    load_features,
    load_semantic_vectors,
    load_split,
    ridge_transfer_cosine,
    save_benchmark,
    save_features,
    save_semantic_vectors,
)
from region_synth.errors import ConfigError, DataError, MalformedFileError


class TestGenerateBenchmark:
    def test_counts_and_shapes(self, tiny_benchmark, tiny_benchmark_config):
        cfg = tiny_benchmark_config
        b = tiny_benchmark
        assert b.seen_ids == [0, 1, 2]
        assert b.unseen_ids == [3, 4]
        assert b.d_f == cfg.d_f
        assert len(b.seen_train) == cfg.num_seen * cfg.samples_per_class_train
        assert len(b.proposals) == len(b.seen_train) * cfg.proposals_per_sample
        assert len(b.background) == cfg.background_count
        assert b.background.labels is None
        assert len(b.unseen_test) == cfg.num_unseen * cfg.samples_per_class_test
        assert set(b.seen_train.labels.tolist()) == set(b.seen_ids)
        assert set(b.unseen_test.labels.tolist()) == set(b.unseen_ids)

    def test_features_are_non_negative(self, tiny_benchmark):
        for batch in (tiny_benchmark.seen_train, tiny_benchmark.proposals, tiny_benchmark.background):
            assert bool((batch.features >= 0).all())

    def test_same_seed_same_benchmark(self, tiny_benchmark_config):
        a = generate_benchmark(tiny_benchmark_config)
        b = generate_benchmark(tiny_benchmark_config)
        assert torch.equal(a.seen_train.features, b.seen_train.features)
        assert torch.equal(a.unseen_test.features, b.unseen_test.features)

    def test_different_seed_different_benchmark(self, tiny_benchmark_config):
        a = generate_benchmark(tiny_benchmark_config, seed=1)
        b = generate_benchmark(tiny_benchmark_config, seed=2)
        assert not torch.equal(a.seen_train.features, b.seen_train.features)

    def test_overlapping_class_ids(self, tiny_benchmark_config):
        with pytest.raises(ConfigError):
            generate_benchmark(tiny_benchmark_config, seen_ids=[0, 1, 2], unseen_ids=[2, 5])

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            BenchmarkConfig(num_seen=1)

    def test_semantic_vectors_can_be_unit_norm(self, tiny_benchmark_config):
        cfg = dataclasses.replace(tiny_benchmark_config, normalize_semantic=True)
        vectors = generate_benchmark(cfg).semantic_vectors()
        for v in vectors.values():
            assert torch.linalg.vector_norm(v).item() == pytest.approx(1.0)

    def test_unseen_means_are_learnable_from_seen_classes(self):
        assert ridge_transfer_cosine(generate_benchmark(BenchmarkConfig())) > 0.9

    def test_class_means_match_their_specs(self):
        cfg = BenchmarkConfig(seed=3)
        b = generate_benchmark(cfg)
        sigma = cfg.cov_scale
        for split, specs in ((b.seen_train, b.seen), (b.seen_test, b.seen), (b.unseen_test, b.unseen)):
            for spec in specs:
                rows = split.features[split.labels == spec.class_id]
                # coordinates far from the rectifier, where the sample mean is unbiased
                away = spec.mean > 4 * sigma
                error = rows[:, away].mean(dim=0) - spec.mean[away]
                rms = float(error.pow(2).mean().sqrt())
                assert rms < 3 * sigma / math.sqrt(rows.shape[0]), spec.class_id

    @settings(max_examples=100, deadline=None)
    @given(
        num_seen=st.integers(2, 5),
        num_unseen=st.integers(1, 3),
        d_f=st.integers(2, 8),
        d_w=st.integers(2, 5),
        train=st.integers(1, 6),
        test=st.integers(1, 6),
        background=st.integers(0, 10),
        proposals=st.integers(1, 3),
        normalize=st.booleans(),
        seed=st.integers(0, 2**31 - 1),
    )
    def test_invariants_hold_for_any_config(
        self, num_seen, num_unseen, d_f, d_w, train, test, background, proposals, normalize, seed
    ):
        cfg = BenchmarkConfig(
            num_seen=num_seen,
            num_unseen=num_unseen,
            d_f=d_f,
            d_w=d_w,
            samples_per_class_train=train,
            samples_per_class_test=test,
            background_count=background,
            proposals_per_sample=proposals,
            normalize_semantic=normalize,
            seed=seed,
        )
        b = generate_benchmark(cfg)
        assert set(b.seen_ids).isdisjoint(b.unseen_ids)
        assert len(b.seen_train) == num_seen * train
        assert len(b.seen_test) == num_seen * test
        assert len(b.unseen_test) == num_unseen * test
        assert len(b.proposals) == proposals * len(b.seen_train)
        assert torch.equal(b.proposals.labels, b.seen_train.labels.repeat(proposals))
        assert len(b.background) == background
        for batch in (b.seen_train, b.proposals, b.background, b.seen_test, b.unseen_test):
            assert batch.d_f == d_f
            assert bool((batch.features >= 0).all())
        assert bool((b.proposals.features[: len(b.seen_train)] >= b.seen_train.features).all())
        for spec in b.seen + b.unseen:
            assert spec.semantic.shape == (d_w,)
            assert bool((spec.mean >= 0).all())
            if normalize:
                assert float(torch.linalg.vector_norm(spec.semantic)) == pytest.approx(1.0)


class TestFeatureFiles:
    def test_binary_round_trip_is_exact(self, tiny_benchmark, tmp_path):
        path = str(tmp_path / "train.rsf")
        save_features(tiny_benchmark.seen_train, path)
        loaded = load_features(path)
        assert torch.equal(loaded.features, tiny_benchmark.seen_train.features)
        assert torch.equal(loaded.labels, tiny_benchmark.seen_train.labels)

    def test_csv_with_and_without_labels(self, tmp_path):
        labelled = tmp_path / "l.csv"
        labelled.write_text("label,f0,f1\n3,0.5,1.5\n4,2.0,0.0\n")
        batch = load_features(str(labelled), expected_d_f=2)
        assert batch.labels.tolist() == [3, 4]
        assert batch.features.tolist() == [[0.5, 1.5], [2.0, 0.0]]

        bare = tmp_path / "b.csv"
        bare.write_text("f0,f1,f2\n1,2,3\n")
        assert load_features(str(bare)).labels is None

    def test_unlabelled_binary(self, tmp_path):
        path = str(tmp_path / "bg.rsf")
        save_features(FeatureBatch(features=torch.ones(3, 2, dtype=torch.float64)), path)
        assert load_features(path).labels is None

    def test_width_mismatch(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("label,f0,f1\n3,0.5,1.5\n")
        with pytest.raises(MalformedFileError):
            load_features(str(path), expected_d_f=3)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.rsf"
        path.write_bytes(b"XXXX" + bytes(20))
        with pytest.raises(MalformedFileError):
            load_features(str(path))

    def test_truncated_body(self, tiny_benchmark, tmp_path):
        path = tmp_path / "t.rsf"
        save_features(tiny_benchmark.seen_test, str(path))
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(MalformedFileError):
            load_features(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_features(str(tmp_path / "none.rsf"))


class TestSemanticVectors:
    def test_round_trip_and_header_skip(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("class_id,v0,v1\n0,3.0,4.0\n1,1.0,0.0\n")
        vectors = load_semantic_vectors(str(path), normalize=True)
        assert vectors[0].tolist() == pytest.approx([0.6, 0.8])
        out = tmp_path / "w2.csv"
        save_semantic_vectors(vectors, str(out))
        assert torch.equal(load_semantic_vectors(str(out))[1], vectors[1])

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("0,1.0,2.0\n0,3.0,4.0\n")
        with pytest.raises(MalformedFileError):
            load_semantic_vectors(str(path))

    def test_inconsistent_width(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("0,1.0,2.0\n1,3.0\n")
        with pytest.raises(MalformedFileError):
            load_semantic_vectors(str(path))

    def test_zero_vector_cannot_be_normalized(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("0,1.0,2.0\n1,0.0,0.0\n")
        assert load_semantic_vectors(str(path))[1].tolist() == [0.0, 0.0]
        with pytest.raises(MalformedFileError, match="class 1"):
            load_semantic_vectors(str(path), normalize=True)


class TestBenchmarkStore:
    def test_round_trip(self, tiny_benchmark, tmp_path):
        save_benchmark(tiny_benchmark, str(tmp_path))
        loaded = load_benchmark(str(tmp_path))
        assert loaded.seen_ids == tiny_benchmark.seen_ids
        assert loaded.unseen_ids == tiny_benchmark.unseen_ids
        assert torch.equal(loaded.proposals.features, tiny_benchmark.proposals.features)
        assert torch.equal(loaded.background.features, tiny_benchmark.background.features)
        for a, b in zip(loaded.unseen, tiny_benchmark.unseen, strict=True):
            assert torch.equal(a.semantic, b.semantic)
            assert torch.equal(a.mean, b.mean)

    def test_manifest_lists_every_file(self, tiny_benchmark, tmp_path):
        manifest = save_benchmark(tiny_benchmark, str(tmp_path), settings={"seed": 7})
        on_disk = json.loads((tmp_path / MANIFEST).read_text())
        assert on_disk == manifest
        assert sorted(p.name for p in tmp_path.iterdir() if p.name != MANIFEST) == manifest["files"]

    def test_same_seed_writes_identical_bytes(self, tiny_benchmark_config, tmp_path):
        for name in ("a", "b"):
            save_benchmark(generate_benchmark(tiny_benchmark_config), str(tmp_path / name))
        for path in (tmp_path / "a").iterdir():
            assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes()

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DataError):
            load_benchmark(str(tmp_path))

    def test_split_file_roles(self, tmp_path):
        path = tmp_path / "split.csv"
        path.write_text("class_id,role\n0,seen\n1,unseen\n")
        assert load_split(str(path)) == ([0], [1])
        path.write_text("class_id,role\n0,seen\n0,unseen\n")
        with pytest.raises(MalformedFileError):
            load_split(str(path))
