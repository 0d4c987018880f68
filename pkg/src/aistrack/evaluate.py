"""Scoring of association decisions: confusion matrix and one-vs-rest metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IoFailure, UnknownObjectId

NEW_TRACK = "NEW"


@dataclass
class ConfusionMatrix:
    labels: list[str]  # row/column order; may include NEW as a predicted-only column
    counts: np.ndarray  # square, rows = true label, cols = predicted label

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class VesselMetrics:
    vessel_id: str
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    accuracy: float
    f1: float


def confusion(assignments: list[tuple[int, str]], truth: dict[int, str]) -> ConfusionMatrix:
    """Build the matrix from (object_id, predicted_vid) pairs and a truth map."""
    for object_id, _ in assignments:
        if object_id not in truth:
            raise UnknownObjectId(f"object_id {object_id} absent from truth")
    labels = sorted({truth[oid] for oid, _ in assignments})
    predicted_only = sorted({p for _, p in assignments} - set(labels))
    labels = labels + predicted_only
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for object_id, predicted in assignments:
        counts[index[truth[object_id]], index[predicted]] += 1
    return ConfusionMatrix(labels=labels, counts=counts)


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def metrics(cm: ConfusionMatrix) -> list[VesselMetrics]:
    """One-vs-rest TP/FP/FN/TN per label, then the precision/recall/accuracy/F1
    formulas; 0/0 cases yield 0.0."""
    total = cm.total
    out = []
    for i, label in enumerate(cm.labels):
        tp = int(cm.counts[i, i])
        fp = int(cm.counts[:, i].sum()) - tp
        fn = int(cm.counts[i, :].sum()) - tp
        tn = total - tp - fp - fn
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        accuracy = _safe_div(tp + tn, total)
        f1 = _safe_div(2 * precision * recall, precision + recall)
        out.append(
            VesselMetrics(
                vessel_id=label,
                tp=tp,
                fp=fp,
                fn=fn,
                tn=tn,
                precision=precision,
                recall=recall,
                accuracy=accuracy,
                f1=f1,
            )
        )
    return out


def macro_averages(per_vessel: list[VesselMetrics]) -> dict[str, float]:
    if not per_vessel:
        return {"precision": 0.0, "recall": 0.0, "accuracy": 0.0, "f1": 0.0}
    return {
        "precision": float(np.mean([m.precision for m in per_vessel])),
        "recall": float(np.mean([m.recall for m in per_vessel])),
        "accuracy": float(np.mean([m.accuracy for m in per_vessel])),
        "f1": float(np.mean([m.f1 for m in per_vessel])),
    }


def report_dict(cm: ConfusionMatrix, per_vessel: list[VesselMetrics], meta: dict | None = None) -> dict:
    return {
        "labels": cm.labels,
        "confusion_matrix": cm.counts.tolist(),
        "per_vessel": [
            {
                "vessel_id": m.vessel_id,
                "tp": m.tp,
                "fp": m.fp,
                "fn": m.fn,
                "tn": m.tn,
                "precision": m.precision,
                "recall": m.recall,
                "accuracy": m.accuracy,
                "f1": m.f1,
            }
            for m in per_vessel
        ],
        "macro": macro_averages(per_vessel),
        "meta": meta or {},
    }


def report_text(cm: ConfusionMatrix, per_vessel: list[VesselMetrics]) -> str:
    lines = [f"{'Vessel':<16}{'Precision':>10}{'Recall':>10}{'Accuracy':>10}{'F1 score':>10}"]
    for m in per_vessel:
        lines.append(
            f"{m.vessel_id:<16}{m.precision:>10.3f}{m.recall:>10.3f}"
            f"{m.accuracy:>10.3f}{m.f1:>10.3f}"
        )
    macro = macro_averages(per_vessel)
    lines.append(
        f"{'macro':<16}{macro['precision']:>10.3f}{macro['recall']:>10.3f}"
        f"{macro['accuracy']:>10.3f}{macro['f1']:>10.3f}"
    )
    return "\n".join(lines) + "\n"


def write_report(
    cm: ConfusionMatrix,
    per_vessel: list[VesselMetrics],
    path: str | Path,
    meta: dict | None = None,
) -> None:
    """Write report.json and a Figure-3b-style report.txt next to it."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report_dict(cm, per_vessel, meta), sort_keys=True, indent=1))
        path.with_suffix(".txt").write_text(report_text(cm, per_vessel))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
