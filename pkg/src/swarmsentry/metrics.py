"""Detection-quality evaluation: confusion counts, threshold sweeps, ROC/AUC,
alarm smoothing and detection latency.

Conventions, fixed for reproducibility: a sample is predicted positive iff
``score >= threshold`` (inclusive); a 0/0 precision or recall is reported as
1.0 with its ``*_defined`` flag cleared rather than as NaN.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .sim import EventLog


@dataclass(frozen=True, slots=True)
class LabeledScore:
    """One scored sample; higher score means more anomalous / more positive."""

    score: float
    label: bool

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"score must be finite, got {self.score}")


@dataclass(frozen=True, slots=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True, slots=True)
class ThresholdReport:
    threshold: float
    accuracy: float
    precision: float
    recall: float
    precision_defined: bool = True
    recall_defined: bool = True


@dataclass(frozen=True, slots=True)
class RocCurve:
    """ROC points over all distinct score thresholds, plus the area.

    ``points[0]`` is the (0, 0) anchor (threshold above every score);
    ``points[i + 1]`` belongs to ``thresholds[i]``, which run in descending
    order and end at the minimum score, where the curve reaches (1, 1).
    """

    thresholds: tuple[float, ...]
    points: tuple[tuple[float, float], ...]
    auc: float


def confusion_at(scores: Sequence[LabeledScore], threshold: float) -> Confusion:
    """Counts at one threshold; predicted positive iff score >= threshold."""
    if not scores:
        raise ValueError("cannot compute a confusion matrix over zero samples")
    tp = fp = tn = fn = 0
    for sample in scores:
        if sample.score >= threshold:
            if sample.label:
                tp += 1
            else:
                fp += 1
        elif sample.label:
            fn += 1
        else:
            tn += 1
    return Confusion(tp, fp, tn, fn)


def _ratio(num: int, den: int) -> tuple[float, bool]:
    if den == 0:
        return 1.0, False
    return num / den, True


def sweep(scores: Sequence[LabeledScore], thresholds: Iterable[float]) -> list[ThresholdReport]:
    """One report per threshold: accuracy, precision, recall."""
    reports = []
    for threshold in thresholds:
        c = confusion_at(scores, threshold)
        precision, p_def = _ratio(c.tp, c.tp + c.fp)
        recall, r_def = _ratio(c.tp, c.tp + c.fn)
        reports.append(
            ThresholdReport(
                threshold=threshold,
                accuracy=(c.tp + c.tn) / c.total,
                precision=precision,
                recall=recall,
                precision_defined=p_def,
                recall_defined=r_def,
            )
        )
    return reports


def roc_auc(scores: Sequence[LabeledScore]) -> RocCurve:
    """Build the ROC curve and its trapezoidal area.

    Tied scores collapse into a single curve point, which makes the
    trapezoidal area equal to the probability that a uniformly random
    positive outranks a uniformly random negative with ties counted 1/2.
    """
    n_pos = sum(1 for s in scores if s.label)
    n_neg = len(scores) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs at least one positive and one negative label")

    ordered = sorted(scores, key=lambda s: s.score, reverse=True)
    thresholds: list[float] = []
    points: list[tuple[float, float]] = [(0.0, 0.0)]
    auc = 0.0
    tp = fp = 0
    prev_fpr = prev_tpr = 0.0
    i = 0
    while i < len(ordered):
        score = ordered[i].score
        while i < len(ordered) and ordered[i].score == score:
            if ordered[i].label:
                tp += 1
            else:
                fp += 1
            i += 1
        fpr = fp / n_neg
        tpr = tp / n_pos
        thresholds.append(score)
        points.append((fpr, tpr))
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0
        prev_fpr, prev_tpr = fpr, tpr
    return RocCurve(tuple(thresholds), tuple(points), auc)


def operating_point(curve: RocCurve) -> float:
    """Threshold maximizing Youden's J = tpr - fpr, ties toward the larger one."""
    best_threshold = curve.thresholds[0]
    best_j = -math.inf
    for threshold, (fpr, tpr) in zip(curve.thresholds, curve.points[1:]):
        j = tpr - fpr
        if j > best_j:  # thresholds descend, so ties keep the earlier/larger one
            best_j = j
            best_threshold = threshold
    return best_threshold


def precision_recall_points(scores: Sequence[LabeledScore]) -> list[tuple[float, float]]:
    """(recall, precision) at every distinct threshold, descending."""
    thresholds = sorted({s.score for s in scores}, reverse=True)
    return [(r.recall, r.precision) for r in sweep(scores, thresholds)]


def consecutive_alarms(predictions: Sequence[bool], k: int) -> list[bool]:
    """Alarm at index i iff predictions i-k+1 .. i are all positive.

    k = 1 is the identity; larger k suppresses isolated false positives at
    the cost of one extra sample of latency per required repeat.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    alarms = []
    streak = 0
    for predicted in predictions:
        streak = streak + 1 if predicted else 0
        alarms.append(streak >= k)
    return alarms


def detection_latency(log: EventLog) -> dict[int, float | None]:
    """Seconds from each intruder's first transmission to its first alarm.

    Keyed by intruder agent id; None means not detected (or never heard).
    A replay intruder transmits under its source's id, so its alarm is the
    first one raised against that claimed id at or after the intruder began
    transmitting.
    """
    first_tx: dict[int, float] = {}
    for event in log.tx:
        if event.agent_id not in first_tx:
            first_tx[event.agent_id] = event.time

    latencies: dict[int, float | None] = {}
    for agent_id in sorted(log.intruder_ids):
        started = first_tx.get(agent_id)
        if started is None:
            latencies[agent_id] = None
            continue
        claimed = log.claimed_ids[agent_id]
        alarm_time = None
        for alarm in log.alarms:
            if alarm.drone_id == claimed and alarm.time >= started:
                alarm_time = alarm.time
                break
        latencies[agent_id] = None if alarm_time is None else alarm_time - started
    return latencies


def residual_scores(log: EventLog) -> list[LabeledScore]:
    """Per-observation |RSSI residual| labeled by ground-truth sender.

    Turns a simulation into sweep/ROC input: the positive class is every
    observation whose physical transmitter was an intruder agent.
    """
    return [
        LabeledScore(abs(event.residual), event.agent_id in log.intruder_ids)
        for event in log.verifications
    ]


def read_scores_csv(path: str | Path) -> list[LabeledScore]:
    """Load (score, label) rows; a 'score,label'-style header row is optional."""
    scores: list[LabeledScore] = []
    with open(path, newline="", encoding="utf-8") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected 'score,label', got {row!r}")
            first = row[0].strip().lower()
            if lineno == 1 and first and not _is_number(first):
                continue  # header
            try:
                score = float(row[0])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad score {row[0]!r}") from None
            label_text = row[1].strip().lower()
            if label_text in ("1", "true"):
                label = True
            elif label_text in ("0", "false"):
                label = False
            else:
                raise ValueError(f"{path}:{lineno}: bad label {row[1]!r}")
            scores.append(LabeledScore(score, label))
    if not scores:
        raise ValueError(f"{path}: no score rows")
    return scores


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True
