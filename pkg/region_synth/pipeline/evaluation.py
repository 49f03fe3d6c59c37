import csv
from collections import Counter

import torch

from region_synth.data import BACKGROUND, Benchmark, EvalMode, EvalReport
from region_synth.errors import DataError
from region_synth.model import MergedClassifier


def harmonic_mean(seen: float, unseen: float) -> float:
    if seen <= 0 or unseen <= 0:
        return 0.0
    return 2.0 * seen * unseen / (seen + unseen)


def _predict(logits: torch.Tensor, class_ids: list[int]) -> torch.Tensor:
    return torch.tensor(class_ids, dtype=torch.long)[logits.argmax(dim=1)]


def _per_class_accuracy(predicted: torch.Tensor, labels: torch.Tensor) -> dict[int, float]:
    accuracy = {}
    for class_id in sorted(set(labels.tolist())):
        mask = labels == class_id
        accuracy[class_id] = float((predicted[mask] == class_id).double().mean()) * 100.0
    return accuracy


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _restricted_predictions(
    merged: MergedClassifier, features: torch.Tensor, unseen_ids: list[int]
) -> torch.Tensor:
    # unseen rows and the background row only; seen-class rows are never read
    class_ids = list(unseen_ids) + [BACKGROUND]
    with torch.no_grad():
        return _predict(merged.logits_for(features, class_ids), class_ids)


def evaluate(merged: MergedClassifier, benchmark: Benchmark, mode: EvalMode | str = EvalMode.GZSD) -> EvalReport:
    """
    Top-1 accuracy per class on held-out features, in percent.

    ZSD: unseen test features against the unseen(+background) logit space.
    GZSD: seen and unseen test features against the full merged space; the report also
    carries the ZSD accuracy of the same classifier.
    """
    mode = EvalMode.parse(mode)
    dtype = merged.seen.fc.weight.dtype
    unseen_features = benchmark.unseen_test.features.to(dtype)
    unseen_labels = benchmark.unseen_test.labels
    if unseen_features.shape[0] == 0:
        raise DataError("no unseen test features to evaluate")

    zsd_predicted = _restricted_predictions(merged, unseen_features, benchmark.unseen_ids)
    zsd_per_class = _per_class_accuracy(zsd_predicted, unseen_labels)
    zsd_accuracy = _mean(list(zsd_per_class.values()))

    if mode is EvalMode.ZSD:
        confusion = Counter(zip(unseen_labels.tolist(), zsd_predicted.tolist(), strict=True))
        return EvalReport(
            mode=mode,
            per_class_accuracy=zsd_per_class,
            unseen_accuracy=zsd_accuracy,
            zsd_accuracy=zsd_accuracy,
            confusion=dict(sorted(confusion.items())),
        )

    if benchmark.seen_test.features.shape[0] == 0:
        raise DataError("no seen test features to evaluate")
    features = torch.cat([benchmark.seen_test.features.to(dtype), unseen_features])
    labels = torch.cat([benchmark.seen_test.labels, unseen_labels])
    with torch.no_grad():
        predicted = _predict(merged(features), merged.class_ids)
    per_class = _per_class_accuracy(predicted, labels)
    seen_acc = _mean([per_class[c] for c in benchmark.seen_ids if c in per_class])
    unseen_acc = _mean([per_class[c] for c in benchmark.unseen_ids if c in per_class])
    confusion = Counter(zip(labels.tolist(), predicted.tolist(), strict=True))
    return EvalReport(
        mode=mode,
        per_class_accuracy=per_class,
        unseen_accuracy=unseen_acc,
        zsd_accuracy=zsd_accuracy,
        seen_accuracy=seen_acc,
        harmonic_mean=harmonic_mean(seen_acc, unseen_acc),
        confusion=dict(sorted(confusion.items())),
    )


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def write_report_csv(report: EvalReport, path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["metric", "class_id", "value"])
        writer.writerow(["seen_accuracy", "", _fmt(report.seen_accuracy)])
        writer.writerow(["unseen_accuracy", "", _fmt(report.unseen_accuracy)])
        writer.writerow(["harmonic_mean", "", _fmt(report.harmonic_mean)])
        writer.writerow(["zsd_accuracy", "", _fmt(report.zsd_accuracy)])
        for class_id, acc in report.per_class_accuracy.items():
            writer.writerow(["class_accuracy", class_id, _fmt(acc)])
        for (true, predicted), count in report.confusion.items():
            writer.writerow(["confusion", f"{true}->{predicted}", count])


def format_summary(report: EvalReport) -> str:
    lines = [f"mode: {report.mode.value}"]
    if report.seen_accuracy is not None:
        lines.append(f"S (seen accuracy):    {report.seen_accuracy:.1f}")
    lines.append(f"U (unseen accuracy):  {report.unseen_accuracy:.1f}")
    if report.harmonic_mean is not None:
        lines.append(f"HM:                   {report.harmonic_mean:.1f}")
    lines.append(f"ZSD accuracy:         {report.zsd_accuracy:.1f}")
    lines.append("per-class accuracy:")
    lines += [f"  {class_id}: {acc:.1f}" for class_id, acc in report.per_class_accuracy.items()]
    background_hits = sum(n for (_, p), n in report.confusion.items() if p == BACKGROUND)
    lines.append(f"predicted as background: {background_hits}")
    return "\n".join(lines) + "\n"
