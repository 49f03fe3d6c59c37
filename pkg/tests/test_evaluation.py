import math

import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from region_synth.data import BACKGROUND, Benchmark, ClassSpec, EvalMode, FeatureBatch
from region_synth.errors import ConfigError, DataError
from region_synth.model import LinearClassifier, MergedClassifier
from region_synth.pipeline import evaluate, format_summary, harmonic_mean, write_report_csv


def test_harmonic_mean_reference_values():
    assert round(harmonic_mean(47.1, 49.1), 1) == 48.1
    assert round(harmonic_mean(30.9, 3.4), 1) == 6.1


@given(st.floats(min_value=0, max_value=100))
def test_harmonic_mean_of_equal_values(x):
    assert harmonic_mean(x, x) == pytest.approx(x)


@given(st.floats(min_value=0, max_value=100))
def test_harmonic_mean_is_zero_when_either_side_is(x):
    assert harmonic_mean(0.0, x) == 0.0
    assert harmonic_mean(x, 0.0) == 0.0


@given(st.floats(min_value=0, max_value=100), st.floats(min_value=0, max_value=100))
def test_harmonic_mean_bounds(s, u):
    hm = harmonic_mean(s, u)
    assert 0.0 <= hm <= 2 * min(s, u) + 1e-9
    assert hm <= max(s, u) + 1e-9


def _one_hot_benchmark(rows_per_class: int = 3) -> Benchmark:
    """Class c lives on axis c; seen classes 0, 1 and unseen classes 2, 3."""
    eye = torch.eye(4, dtype=torch.float64)

    def spec(c):
        return ClassSpec(class_id=c, semantic=eye[c, :2], mean=eye[c], cov_scale=0.1, train_count=0, test_count=rows_per_class)

    def batch(classes):
        return FeatureBatch(
            features=torch.cat([eye[c].expand(rows_per_class, -1) for c in classes]).clone(),
            labels=torch.tensor([c for c in classes for _ in range(rows_per_class)]),
        )

    empty = FeatureBatch(features=torch.zeros(0, 4, dtype=torch.float64), labels=torch.zeros(0, dtype=torch.long))
    return Benchmark(
        seen=[spec(0), spec(1)],
        unseen=[spec(2), spec(3)],
        seen_train=empty,
        proposals=empty,
        background=FeatureBatch(features=torch.zeros(0, 4, dtype=torch.float64)),
        seen_test=batch([0, 1]),
        unseen_test=batch([2, 3]),
    )


def _axis_classifier(class_ids: list[int]) -> LinearClassifier:
    classifier = LinearClassifier(4, class_ids)
    with torch.no_grad():
        classifier.fc.weight.zero_()
        classifier.fc.bias.zero_()
        for k, c in enumerate(class_ids):
            if c == BACKGROUND:
                classifier.fc.bias[k] = -1.0
            else:
                classifier.fc.weight[k, c] = 1.0
    return classifier


@pytest.fixture
def perfect():
    return MergedClassifier(_axis_classifier([0, 1, BACKGROUND]), _axis_classifier([2, 3]))


def test_perfect_predictor(perfect):
    report = evaluate(perfect, _one_hot_benchmark(), EvalMode.GZSD)
    assert report.seen_accuracy == 100.0
    assert report.unseen_accuracy == 100.0
    assert report.harmonic_mean == 100.0
    assert report.zsd_accuracy == 100.0
    assert report.per_class_accuracy == {0: 100.0, 1: 100.0, 2: 100.0, 3: 100.0}
    assert report.confusion == {(0, 0): 3, (1, 1): 3, (2, 2): 3, (3, 3): 3}


def test_zsd_mode_never_reads_seen_rows(perfect):
    with torch.no_grad():
        perfect.seen.fc.weight[:2].fill_(math.nan)
        perfect.seen.fc.bias[:2].fill_(math.nan)
    report = evaluate(perfect, _one_hot_benchmark(), "zsd")
    assert report.mode is EvalMode.ZSD
    assert report.unseen_accuracy == 100.0
    assert report.seen_accuracy is None
    assert report.harmonic_mean is None


def test_gzsd_confusion_counts_background_predictions():
    seen = _axis_classifier([0, 1, BACKGROUND])
    with torch.no_grad():
        seen.fc.bias[2] = 5.0
    merged = MergedClassifier(seen, _axis_classifier([2, 3]))
    report = evaluate(merged, _one_hot_benchmark(), EvalMode.GZSD)
    assert report.unseen_accuracy == 0.0
    assert report.harmonic_mean == 0.0
    assert report.confusion[(2, BACKGROUND)] == 3
    assert "predicted as background: 12" in format_summary(report)


def test_unseen_confusions_lower_unseen_accuracy(perfect):
    with torch.no_grad():
        perfect.unseen.fc.weight[1].zero_()
        perfect.unseen.fc.weight[1, 2] = 2.0
    report = evaluate(perfect, _one_hot_benchmark(), EvalMode.GZSD)
    assert report.per_class_accuracy[2] == 0.0
    assert report.per_class_accuracy[3] == 0.0
    assert report.seen_accuracy == 100.0


def test_empty_test_set(perfect):
    benchmark = _one_hot_benchmark()
    benchmark.unseen_test = FeatureBatch(features=torch.zeros(0, 4, dtype=torch.float64), labels=torch.zeros(0, dtype=torch.long))
    with pytest.raises(DataError):
        evaluate(perfect, benchmark, EvalMode.ZSD)


def test_invalid_mode(perfect):
    with pytest.raises(ConfigError):
        evaluate(perfect, _one_hot_benchmark(), "detection")


def test_report_files(perfect, tmp_path):
    report = evaluate(perfect, _one_hot_benchmark(), EvalMode.GZSD)
    path = tmp_path / "report.csv"
    write_report_csv(report, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "metric,class_id,value"
    assert "harmonic_mean,,100.0000" in lines
    assert "confusion,2->2,3" in lines
    summary = format_summary(report)
    assert "HM:" in summary and "ZSD accuracy:" in summary
