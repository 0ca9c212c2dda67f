"""Classification metrics, confusion matrices, and k-fold cross-validation.

The confusion matrix is fixed as rows = actual, columns = predicted, both in
canonical frame order. Per-class precision/recall/F1 use an explicit
zero-division policy (0 when the denominator is 0), which is what produces
an all-zero row for a class the model never predicts.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .codebook import FRAME_ORDER, NUM_FRAMES, FrameCode, frame_index
from .corpus import Dataset, make_dataset


class MetricInputError(ValueError):
    """Metric computation received unusable input."""


@dataclass(frozen=True)
class ConfusionMatrix:
    """6x6 counts over (actual, predicted) frame pairs in canonical order."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (NUM_FRAMES, NUM_FRAMES):
            raise MetricInputError(
                f"confusion matrix must be {NUM_FRAMES}x{NUM_FRAMES}, got {counts.shape}"
            )
        if (counts < 0).any():
            raise MetricInputError("confusion matrix counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    def __getitem__(self, key: tuple[FrameCode, FrameCode]) -> int:
        actual, predicted = key
        return int(self.counts[frame_index(actual), frame_index(predicted)])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))

    def row_sum(self, code: FrameCode) -> int:
        return int(self.counts[frame_index(code), :].sum())

    def col_sum(self, code: FrameCode) -> int:
        return int(self.counts[:, frame_index(code)].sum())

    def to_lists(self) -> list[list[int]]:
        return self.counts.tolist()


def confusion(
    y_true: Sequence[FrameCode], y_pred: Sequence[FrameCode]
) -> ConfusionMatrix:
    """Tally actual-vs-predicted counts into a ConfusionMatrix."""
    if len(y_true) != len(y_pred):
        raise MetricInputError(
            f"label lists differ in length: {len(y_true)} vs {len(y_pred)}"
        )
    if not y_true:
        raise MetricInputError("label lists are empty")
    counts = np.zeros((NUM_FRAMES, NUM_FRAMES), dtype=np.int64)
    for actual, predicted in zip(y_true, y_pred):
        counts[frame_index(actual), frame_index(predicted)] += 1
    return ConfusionMatrix(counts)


CSV_HEADER_CELL = "actual\\predicted"


def save_confusion_csv(cm: ConfusionMatrix, path) -> None:
    """Write the matrix in the interchange CSV layout."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([CSV_HEADER_CELL] + [c.value for c in FRAME_ORDER])
        for code, row in zip(FRAME_ORDER, cm.counts):
            writer.writerow([code.value] + [int(v) for v in row])


def load_confusion_csv(path) -> ConfusionMatrix:
    """Read a matrix from the interchange CSV layout, validating the header."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    expected_header = [CSV_HEADER_CELL] + [c.value for c in FRAME_ORDER]
    if not rows or rows[0] != expected_header:
        raise MetricInputError(
            f"{path}: header must be {','.join(expected_header)!r}"
        )
    if len(rows) != NUM_FRAMES + 1:
        raise MetricInputError(f"{path}: expected {NUM_FRAMES} data rows, got {len(rows) - 1}")
    counts = np.zeros((NUM_FRAMES, NUM_FRAMES), dtype=np.int64)
    for i, (code, row) in enumerate(zip(FRAME_ORDER, rows[1:]), start=2):
        if not row or row[0] != code.value:
            raise MetricInputError(f"{path}: row {i} must start with {code.value!r}")
        if len(row) != NUM_FRAMES + 1:
            raise MetricInputError(f"{path}: row {i} has {len(row) - 1} counts")
        try:
            counts[frame_index(code), :] = [int(v) for v in row[1:]]
        except ValueError as exc:
            raise MetricInputError(f"{path}: row {i}: {exc}") from exc
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class ClassMetrics:
    """Per-class precision/recall/F1 plus the class's support (row sum)."""

    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    """Per-class metrics with macro, weighted, and accuracy aggregates."""

    per_class: dict[FrameCode, ClassMetrics]
    macro: tuple[float, float, float]  # (precision, recall, f1)
    weighted: tuple[float, float, float]
    accuracy: float

    def to_obj(self) -> dict:
        return {
            "per_class": {
                code.value: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for code, m in self.per_class.items()
            },
            "macro": {
                "precision": self.macro[0],
                "recall": self.macro[1],
                "f1": self.macro[2],
            },
            "weighted": {
                "precision": self.weighted[0],
                "recall": self.weighted[1],
                "f1": self.weighted[2],
            },
            "accuracy": self.accuracy,
        }

    def rounded(self, ndigits: int = 2) -> dict:
        """Display form for comparisons against published 2-decimal tables."""

        def walk(value):
            if isinstance(value, float):
                return round(value, ndigits)
            if isinstance(value, dict):
                return {k: walk(v) for k, v in value.items()}
            return value

        return walk(self.to_obj())


def class_metrics(cm: ConfusionMatrix) -> dict[FrameCode, ClassMetrics]:
    """Per-class metrics with the zero-division policy.

    precision = diag / column sum (0 when the class is never predicted);
    recall = diag / row sum (0 when the class has no support);
    f1 = harmonic mean (0 when precision + recall is 0).
    """
    metrics = {}
    for code in FRAME_ORDER:
        true_positive = cm[code, code]
        col = cm.col_sum(code)
        row = cm.row_sum(code)
        precision = true_positive / col if col > 0 else 0.0
        recall = true_positive / row if row > 0 else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        metrics[code] = ClassMetrics(
            precision=precision, recall=recall, f1=f1, support=row
        )
    return metrics


def aggregate(
    per_class: dict[FrameCode, ClassMetrics], cm: ConfusionMatrix
) -> EvalReport:
    """Macro (unweighted, zero-support classes included) and weighted means."""
    missing = [c.value for c in FRAME_ORDER if c not in per_class]
    if missing:
        raise MetricInputError(f"per-class metrics missing codes: {missing}")
    total = cm.total
    if total == 0:
        raise MetricInputError("confusion matrix is empty")
    ordered = [per_class[c] for c in FRAME_ORDER]
    macro = (
        sum(m.precision for m in ordered) / NUM_FRAMES,
        sum(m.recall for m in ordered) / NUM_FRAMES,
        sum(m.f1 for m in ordered) / NUM_FRAMES,
    )
    weighted = (
        sum(m.precision * m.support for m in ordered) / total,
        sum(m.recall * m.support for m in ordered) / total,
        sum(m.f1 * m.support for m in ordered) / total,
    )
    accuracy = cm.trace / total
    return EvalReport(
        per_class=dict(per_class), macro=macro, weighted=weighted, accuracy=accuracy
    )


def report_from_matrix(cm: ConfusionMatrix) -> EvalReport:
    """Full report straight from a confusion matrix."""
    return aggregate(class_metrics(cm), cm)


# ---------------------------------------------------------------------------
# cross-validation


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every para_id to exactly one of k folds."""

    k: int
    assignments: dict[str, int]
    seed: int

    def fold_sizes(self) -> list[int]:
        sizes = [0] * self.k
        for fold in self.assignments.values():
            sizes[fold] += 1
        return sizes


def make_folds(
    ds: Dataset, k: int, seed: int, stratified: bool = False
) -> FoldPlan:
    """Deterministic random partition of a dataset into k folds.

    Unstratified mode shuffles once and slices into near-equal folds (sizes
    differ by at most 1). Stratified mode deals each main-frame class
    round-robin across folds, so classes with fewer than k members land one
    per fold until exhausted.
    """
    if k < 2:
        raise MetricInputError(f"k must be at least 2, got {k}")
    if k > len(ds):
        raise MetricInputError(f"k={k} exceeds dataset size {len(ds)}")
    rng = random.Random(seed)
    assignments: dict[str, int] = {}
    if not stratified:
        para_ids = [r.paragraph.para_id for r in ds.records]
        rng.shuffle(para_ids)
        base, remainder = divmod(len(para_ids), k)
        start = 0
        for fold in range(k):
            size = base + (1 if fold < remainder else 0)
            for pid in para_ids[start : start + size]:
                assignments[pid] = fold
            start += size
    else:
        by_class: dict[FrameCode, list[str]] = {}
        for record in ds.records:
            by_class.setdefault(record.labels.main, []).append(
                record.paragraph.para_id
            )
        next_fold = 0
        for code in FRAME_ORDER:
            para_ids = by_class.get(code, [])
            rng.shuffle(para_ids)
            for pid in para_ids:
                assignments[pid] = next_fold
                next_fold = (next_fold + 1) % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


FitPredictFn = Callable[[object, Dataset, Dataset], list[FrameCode]]


def cross_validate(
    ds: Dataset,
    k: int,
    config,
    seed: int,
    stratified: bool = False,
    fit_predict: FitPredictFn | None = None,
) -> tuple[ConfusionMatrix, EvalReport]:
    """k-fold cross-validation with pooled out-of-fold predictions.

    Each fold is predicted by a model trained on the other k-1 folds; all
    (actual, predicted) pairs are pooled into a single confusion matrix, so
    the matrix total equals the dataset size. ``fit_predict(config, train,
    held_out)`` defaults to fine-tuning the configured encoder; tests may
    pass a stub.
    """
    plan = make_folds(ds, k, seed, stratified=stratified)
    if fit_predict is None:
        from .train import fit_predict_fold as fit_predict

    y_true: list[FrameCode] = []
    y_pred: list[FrameCode] = []
    for fold in range(k):
        train_records = [
            r for r in ds.records if plan.assignments[r.paragraph.para_id] != fold
        ]
        held_records = [
            r for r in ds.records if plan.assignments[r.paragraph.para_id] == fold
        ]
        train_ds = make_dataset(train_records, split=ds.split)
        held_ds = make_dataset(held_records, split=ds.split)
        fold_config = _fold_config(config, fold)
        predictions = fit_predict(fold_config, train_ds, held_ds)
        if len(predictions) != len(held_records):
            raise MetricInputError(
                f"fold {fold}: predictor returned {len(predictions)} labels "
                f"for {len(held_records)} records"
            )
        y_true.extend(r.labels.main for r in held_records)
        y_pred.extend(predictions)
    cm = confusion(y_true, y_pred)
    return cm, report_from_matrix(cm)


def _fold_config(config, fold: int):
    """Give each fold an isolated output directory when the config has one."""
    output_dir = getattr(config, "output_dir", None)
    if output_dir is None:
        return config
    from dataclasses import replace

    return replace(config, output_dir=str(Path(output_dir) / f"fold{fold}"))


def gold_predictions(
    artifact, gold: Dataset, predict_fn=None
) -> tuple[list[FrameCode], list[FrameCode]]:
    """(actual, predicted) main frames for a gold dataset.

    Guards against leakage: the gold set must be split-tagged "gold" and
    share no documents with the artifact's training fingerprint.
    """
    if gold.split != "gold":
        raise MetricInputError(
            f"gold evaluation requires a gold-tagged dataset, got {gold.split!r}"
        )
    train_doc_ids = set(getattr(artifact, "train_doc_ids", ()) or ())
    if train_doc_ids:
        shared = sorted(train_doc_ids & gold.doc_ids())
        if shared:
            from .corpus import LeakageError

            raise LeakageError(
                f"gold set shares {len(shared)} doc_ids with the training "
                f"fingerprint (e.g. {shared[0]!r})"
            )
    if predict_fn is None:
        from .train import predict_batch

        results = predict_batch(artifact, gold.texts())
        predictions = [main for _, main in results]
    else:
        predictions = list(predict_fn(gold.texts()))
    return gold.main_frames(), predictions


def evaluate_gold(artifact, gold: Dataset, predict_fn=None) -> EvalReport:
    """Predict the gold set and compute the full report."""
    y_true, y_pred = gold_predictions(artifact, gold, predict_fn=predict_fn)
    return report_from_matrix(confusion(y_true, y_pred))
