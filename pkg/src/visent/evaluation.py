"""ROC-AUC, stratified partitions and the repeated-split evaluation protocol."""
from __future__ import annotations

import json
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .model import TrainConfig, label_sort_key, train_one_vs_rest

log = logging.getLogger(__name__)


class UndefinedMetricError(ValueError):
    """AUC requested with an empty positive or negative class."""


def _auc_numerator(pos: np.ndarray, neg: np.ndarray) -> int:
    """Twice the Mann-Whitney U statistic (wins count 2, ties 1), from midranks."""
    scores = np.concatenate([pos, neg])
    order = np.argsort(scores, kind="mergesort")
    ranked = scores[order]
    # doubled midrank of a tie block spanning sorted positions [i, j) is i + j + 1
    boundaries = np.flatnonzero(np.diff(ranked)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [len(ranked)]])
    doubled = np.repeat(starts + ends + 1, ends - starts)
    ranks2 = np.empty(len(scores), dtype=np.int64)
    ranks2[order] = doubled
    n_pos = len(pos)
    return int(ranks2[:n_pos].sum()) - n_pos * (n_pos + 1)


def auc(pos_scores, neg_scores) -> float:
    """Probability that a positive outscores a negative, ties counting one half."""
    pos = np.asarray(pos_scores, dtype=np.float64).reshape(-1)
    neg = np.asarray(neg_scores, dtype=np.float64).reshape(-1)
    if pos.size == 0 or neg.size == 0:
        raise UndefinedMetricError(f"AUC undefined with {pos.size} positives and {neg.size} negatives")
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(neg))):
        raise ValueError("scores must be finite")
    return _auc_numerator(pos, neg) / (2 * pos.size * neg.size)


def accuracy(true_labels, predicted) -> float:
    true_labels, predicted = list(true_labels), list(predicted)
    return sum(t == p for t, p in zip(true_labels, predicted)) / max(len(true_labels), 1)


@dataclass(frozen=True)
class Partition:
    seed: int
    train: np.ndarray
    test: np.ndarray


def _class_members(labels):
    members = OrderedDict()
    for i, label in enumerate(labels):
        members.setdefault(label, []).append(i)
    return OrderedDict(sorted(members.items(), key=lambda kv: label_sort_key(kv[0])))


def stratified_split(labels, test_fraction: float = 0.2, seed: int = 0) -> Partition:
    """Per-class seeded shuffle; ``round(size * fraction)`` (at least 1) go to test."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label, idx in _class_members(list(labels)).items():
        if len(idx) < 2:
            raise ValueError(f"class {label!r} has {len(idx)} member; need at least 2")
        n_test = min(max(1, math.floor(len(idx) * test_fraction + 0.5)), len(idx) - 1)
        perm = rng.permutation(np.asarray(idx))
        test.extend(perm[:n_test])
        train.extend(perm[n_test:])
    return Partition(seed, np.sort(np.asarray(train, dtype=np.intp)), np.sort(np.asarray(test, dtype=np.intp)))


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> list:
    """``k`` partitions whose test sets tile the data, stratified by class."""
    labels = list(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for label, idx in _class_members(labels).items():
        if len(idx) < k:
            raise ValueError(f"class {label!r} has {len(idx)} members; need at least {k}")
        for f, chunk in enumerate(np.array_split(rng.permutation(np.asarray(idx)), k)):
            folds[f].extend(chunk)
    everything = np.arange(len(labels))
    out = []
    for f in range(k):
        test = np.sort(np.asarray(folds[f], dtype=np.intp))
        out.append(Partition(seed, np.setdiff1d(everything, test), test))
    return out


@dataclass
class EvalReport:
    method: str
    labels: list
    per_run: "OrderedDict"  # label -> list of AUC or None, one entry per run
    seeds: list = field(default_factory=list)
    accuracy: list = field(default_factory=list)

    @property
    def runs(self) -> int:
        return len(self.seeds)

    @property
    def mean_auc(self) -> "OrderedDict":
        out = OrderedDict()
        for label in self.labels:
            vals = [v for v in self.per_run[label] if v is not None]
            out[label] = float(np.mean(vals)) if vals else None
        return out

    @property
    def overall(self) -> float:
        vals = [v for v in self.mean_auc.values() if v is not None]
        return float(np.mean(vals)) if vals else float("nan")

    def records(self) -> list:
        rows = []
        for label in self.labels:
            for r, value in enumerate(self.per_run[label]):
                rows.append({"method": self.method, "label": label, "run": r,
                             "seed": self.seeds[r], "auc": value})
        return rows

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "labels": self.labels,
            "seeds": self.seeds,
            "mean_auc": {str(k): v for k, v in self.mean_auc.items()},
            "overall": self.overall,
            "accuracy": self.accuracy,
            "records": self.records(),
        }


def run_protocol(features, labels, train_config: TrainConfig = TrainConfig(), runs: int = 5,
                 test_fraction: float = 0.2, base_seed: int = 0, method: str = "features",
                 mode: str = "split") -> EvalReport:
    """Average per-label AUC over repeated stratified partitions.

    ``mode="split"`` draws ``runs`` independent train/test splits with seeds
    ``base_seed + r``; ``mode="kfold"`` uses the ``runs`` folds of one
    stratified k-fold partition seeded with ``base_seed``.
    """
    X = np.asarray(features)
    labels = list(labels)
    if X.shape[0] != len(labels):
        raise ValueError(f"{X.shape[0]} feature rows but {len(labels)} labels")
    label_set = sorted(set(labels), key=label_sort_key)
    if mode == "split":
        partitions = [stratified_split(labels, test_fraction, base_seed + r) for r in range(runs)]
    elif mode == "kfold":
        partitions = stratified_kfold(labels, runs, base_seed)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    per_run = OrderedDict((label, []) for label in label_set)
    accs = []
    arr = np.array(labels, dtype=object)
    for r, part in enumerate(partitions):
        ovr = train_one_vs_rest(X[part.train], arr[part.train].tolist(), train_config, label_order=label_set)
        scores = ovr.scores(X[part.test])
        test_labels = arr[part.test]
        for label in label_set:
            if label not in scores:
                per_run[label].append(None)
                continue
            s = scores[label]
            hit = test_labels == label
            try:
                per_run[label].append(auc(s[hit], s[~hit]))
            except UndefinedMetricError as exc:
                log.warning("run %d, label %r: %s; excluded from the mean", r, label, exc)
                per_run[label].append(None)
        accs.append(accuracy(test_labels.tolist(), ovr.predict(X[part.test])))
    seeds = [base_seed + r for r in range(runs)] if mode == "split" else [base_seed] * runs
    return EvalReport(method, label_set, per_run, seeds, accs)


def _column_title(label) -> str:
    return str(label).capitalize() if isinstance(label, str) else f"{int(label):d}"


def render_table(reports) -> str:
    """Plain-text table: one row per method, one column per label plus Overall."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to render")
    labels = reports[0].labels
    for rep in reports[1:]:
        if rep.labels != labels:
            raise ValueError(f"label sets differ: {labels} vs {rep.labels}")
    headers = [_column_title(label) for label in labels] + ["Overall"]
    name_w = max(len("Method"), *(len(r.method) for r in reports))
    col_w = max(7, *(len(h) for h in headers))

    def fmt(v):
        return "n/a" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.3f}"

    lines = ["Method".ljust(name_w) + "".join(h.rjust(col_w + 2) for h in headers)]
    lines.append("-" * len(lines[0]))
    for rep in reports:
        values = list(rep.mean_auc.values()) + [rep.overall]
        lines.append(rep.method.ljust(name_w) + "".join(fmt(v).rjust(col_w + 2) for v in values))
    return "\n".join(lines) + "\n"


def dump_reports(reports, seeds_note=None) -> str:
    """JSON document with one record per method, label and run."""
    doc = {"reports": [r.to_dict() for r in reports]}
    if seeds_note is not None:
        doc["seeds"] = seeds_note
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
