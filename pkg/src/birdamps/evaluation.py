"""Splitting, cross-validation, grid search, metrics and experiment reports."""
from __future__ import annotations

import hashlib
import itertools
import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .classifiers import (
    ForestModel,
    StackingParams,
    count_rf_ops,
    train_forest,
    train_logistic,
    train_stacking,
    train_svm_rbf,
)


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    folds: int = 5
    seed: int = 42
    grouping: str = "by_recording"

    def __post_init__(self):
        if not (0 < self.test_fraction < 1):
            raise ValueError("test_fraction must lie in (0, 1)")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if self.grouping not in ("by_recording", "by_window"):
            raise ValueError(f"unknown grouping {self.grouping!r}")


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    present: ClassMetrics
    absent: ClassMetrics
    weighted: ClassMetrics

    # bird_present is the positive class for single-row summaries
    @property
    def precision(self) -> float:
        return self.present.precision

    @property
    def recall(self) -> float:
        return self.present.recall

    @property
    def f1(self) -> float:
        return self.present.f1

    def to_dict(self) -> dict:
        return asdict(self)


def _prf(tp, fp, fn, support) -> ClassMetrics:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return ClassMetrics(p, r, f, int(support))


def metrics_from_counts(tp: int, fp: int, tn: int, fn: int) -> MetricsReport:
    total = tp + fp + tn + fn
    if total == 0:
        raise EvaluationError("no predictions to score")
    present = _prf(tp, fp, fn, tp + fn)
    absent = _prf(tn, fn, fp, tn + fp)
    w1, w0 = (tp + fn) / total, (tn + fp) / total
    weighted = ClassMetrics(w1 * present.precision + w0 * absent.precision,
                            w1 * present.recall + w0 * absent.recall,
                            w1 * present.f1 + w0 * absent.f1, total)
    return MetricsReport(tp, fp, tn, fn, (tp + tn) / total, present, absent, weighted)


def compute_metrics(predictions, labels) -> MetricsReport:
    pred = np.asarray(predictions).astype(int).reshape(-1)
    true = np.asarray(labels).astype(int).reshape(-1)
    if pred.size != true.size:
        raise EvaluationError(f"length mismatch: {pred.size} predictions, {true.size} labels")
    if pred.size == 0:
        raise EvaluationError("no predictions to score")
    tp = int(np.sum((pred == 1) & (true == 1)))
    fp = int(np.sum((pred == 1) & (true == 0)))
    tn = int(np.sum((pred == 0) & (true == 0)))
    fn = int(np.sum((pred == 0) & (true == 1)))
    return metrics_from_counts(tp, fp, tn, fn)


def _group_ids(groups, grouping):
    groups = np.asarray(groups)
    if grouping == "by_window":
        return np.arange(groups.size)
    _, ids = np.unique(groups, return_inverse=True)
    return ids


def _group_strata(ids, labels):
    """Stratum per group from its positive-window rate: none, up to half, more than half."""
    n_groups = ids.max() + 1
    pos = np.bincount(ids, weights=labels, minlength=n_groups)
    size = np.bincount(ids, minlength=n_groups)
    rate = pos / size
    return np.where(rate == 0, 0, np.where(rate <= 0.5, 1, 2))


def split_dataset(groups, labels, spec: SplitSpec = SplitSpec()) -> tuple[np.ndarray, np.ndarray]:
    """Boolean train/test row masks. Groups never straddle the partition.

    ``round(test_fraction * n_groups)`` groups are sent to test, allocated to
    strata by largest remainder.
    """
    labels = np.asarray(labels).astype(int)
    if labels.size == 0:
        raise EvaluationError("cannot split an empty dataset")
    ids = _group_ids(groups, spec.grouping)
    n_groups = ids.max() + 1
    if n_groups < 2:
        raise EvaluationError("need at least two groups to split")
    strata = _group_strata(ids, labels)
    rng = np.random.default_rng(spec.seed)
    n_test = int(round(spec.test_fraction * n_groups))
    n_test = min(max(n_test, 1), n_groups - 1)
    members = [np.flatnonzero(strata == s) for s in range(3)]
    quota = np.array([spec.test_fraction * m.size for m in members])
    take = np.floor(quota).astype(int)
    order = np.argsort(-(quota - take), kind="stable")
    for s in order[:n_test - take.sum()]:
        take[s] += 1
    test_groups = []
    for s, m in enumerate(members):
        test_groups.extend(m[rng.permutation(m.size)][:take[s]])
    is_test = np.zeros(n_groups, dtype=bool)
    is_test[test_groups] = True
    test = is_test[ids]
    return ~test, test


def fold_assignment(groups, labels, folds: int, seed: int, grouping: str = "by_recording") -> np.ndarray:
    """Fold index per row; groups are shuffled within strata and dealt round-robin."""
    labels = np.asarray(labels).astype(int)
    ids = _group_ids(groups, grouping)
    n_groups = ids.max() + 1
    if folds > n_groups:
        raise EvaluationError(f"{folds} folds requested but only {n_groups} groups")
    strata = _group_strata(ids, labels)
    rng = np.random.default_rng(seed)
    group_fold = np.empty(n_groups, dtype=int)
    offset = 0
    for s in range(3):
        m = np.flatnonzero(strata == s)
        m = m[rng.permutation(m.size)]
        group_fold[m] = (np.arange(m.size) + offset) % folds
        offset += m.size
    return group_fold[ids]


Trainer = Callable[[np.ndarray, np.ndarray], object]


@dataclass
class CvResult:
    folds: list[MetricsReport]

    def mean(self, metric: str = "f1") -> float:
        return float(np.mean([getattr(r, metric) for r in self.folds]))


def kfold_cv(X, y, groups, trainer: Trainer, folds: int = 5, seed: int = 42,
             grouping: str = "by_recording") -> CvResult:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    assign = fold_assignment(groups, y, folds, seed, grouping)
    reports = []
    for k in range(folds):
        val = assign == k
        model = trainer(X[~val], y[~val])
        reports.append(compute_metrics(model.predict(X[val]), y[val]))
    return CvResult(reports)


def expand_grid(param_grid: dict) -> list[dict]:
    if not param_grid:
        return [{}]
    keys = list(param_grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(param_grid[k] for k in keys))]


@dataclass
class GridResult:
    best: dict
    table: list[dict]


def grid_search(param_grid: dict, make_trainer: Callable[[dict], Trainer], X, y, groups,
                folds: int = 5, seed: int = 42, grouping: str = "by_recording",
                objective: str = "f1") -> GridResult:
    """Exhaustive CV over the grid; ties go to higher accuracy, then grid order."""
    table = []
    for params in expand_grid(param_grid):
        cv = kfold_cv(X, y, groups, make_trainer(params), folds, seed, grouping)
        table.append({"params": params, "f1": cv.mean("f1"), "accuracy": cv.mean("accuracy"),
                      "precision": cv.mean("precision"), "recall": cv.mean("recall"),
                      "objective": cv.mean(objective)})
    best = max(range(len(table)), key=lambda i: (table[i]["objective"], table[i]["accuracy"], -i))
    return GridResult(table[best]["params"], table)


# experiment ---------------------------------------------------------------

CLASSIFIERS = ("logistic", "svm", "forest", "stacking")
DISPLAY = {"logistic": "Logistic Classifier", "svm": "SVM", "forest": "Random Forest",
           "stacking": "Stacking Classifier"}


@dataclass
class ClassifierConfig:
    logistic: dict = field(default_factory=lambda: {"threshold": 0.45, "C": 1.0})
    svm: dict = field(default_factory=lambda: {"C": 1.0, "gamma": 0.5})
    forest: dict = field(default_factory=lambda: {"trees": 500, "max_depth": 8, "min_samples": 8,
                                                  "features_per_node": 4, "criterion": "entropy"})
    stacking: dict = field(default_factory=lambda: {"folds": 5, "hard_labels": False,
                                                    "meta": {"C": 1.0, "gamma": 0.5}})


def make_trainer(name: str, cfg: ClassifierConfig, seed: int, overrides: dict | None = None) -> Trainer:
    overrides = overrides or {}
    if name == "logistic":
        params = {**cfg.logistic, **overrides}
        return lambda X, y: train_logistic(X, y, **params)
    if name == "svm":
        params = {**cfg.svm, **overrides}
        return lambda X, y: train_svm_rbf(X, y, **params)
    if name == "forest":
        params = {**cfg.forest, **overrides}
        return lambda X, y: train_forest(X, y, seed=seed, **params)
    if name == "stacking":
        st = {**cfg.stacking, **overrides}
        sp = StackingParams(logistic=dict(cfg.logistic), svm=dict(cfg.svm), forest=dict(cfg.forest),
                            meta=dict(st.get("meta", {"C": 1.0, "gamma": 0.5})))
        return lambda X, y: train_stacking(X, y, folds=st.get("folds", 5), seed=seed, params=sp,
                                           hard_labels=st.get("hard_labels", False))
    raise EvaluationError(f"unknown classifier {name!r}")


@dataclass
class FeatureTable:
    """Feature rows with their recording ids, window indices and labels."""
    name: str
    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray
    index: np.ndarray
    columns: tuple[str, ...] = ()

    def align(self, keys: Sequence[tuple[str, int]]) -> "FeatureTable":
        pos = {(g, int(i)): r for r, (g, i) in enumerate(zip(self.groups, self.index))}
        try:
            rows = np.array([pos[(g, int(i))] for g, i in keys])
        except KeyError as exc:
            raise EvaluationError(f"{self.name}: missing feature row {exc}") from None
        return FeatureTable(self.name, self.X[rows], self.y[rows], self.groups[rows], self.index[rows],
                            self.columns)

    @property
    def keys(self) -> list[tuple[str, int]]:
        return [(str(g), int(i)) for g, i in zip(self.groups, self.index)]


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def run_experiment(tables: Sequence[FeatureTable], classifiers: Sequence[str] = CLASSIFIERS,
                   split: SplitSpec = SplitSpec(), cfg: ClassifierConfig | None = None,
                   grids: dict | None = None) -> dict:
    """Train on the train partition, score on the held-out partition.

    Every feature table is aligned to the first one so all feature sets
    share the same split. ``grids`` maps classifier name to a parameter
    grid searched by cross-validation on the train partition only.
    """
    cfg = cfg or ClassifierConfig()
    grids = grids or {}
    if not tables:
        raise EvaluationError("no feature tables given")
    base = tables[0]
    tables = [base] + [t.align(base.keys) for t in tables[1:]]
    train, test = split_dataset(base.groups, base.y, split)
    rows, timing = [], []
    for table in tables:
        for name in classifiers:
            started = time.perf_counter()
            overrides, grid_table = {}, None
            if grids.get(name):
                gr = grid_search(grids[name], lambda p, n=name: make_trainer(n, cfg, split.seed, p),
                                 table.X[train], table.y[train], table.groups[train], split.folds,
                                 split.seed, split.grouping)
                overrides, grid_table = gr.best, gr.table
            model = make_trainer(name, cfg, split.seed, overrides)(table.X[train], table.y[train])
            report = compute_metrics(model.predict(table.X[test]), table.y[test])
            row = {"feature_set": table.name, "classifier": name, "method": DISPLAY[name],
                   "accuracy": report.accuracy, "f1": report.f1, "precision": report.precision,
                   "recall": report.recall, "metrics": report.to_dict(), "params": overrides}
            if grid_table is not None:
                row["grid"] = grid_table
            if isinstance(model, ForestModel):
                row["ops"] = count_rf_ops(model)
            rows.append(row)
            timing.append({"feature_set": table.name, "classifier": name,
                           "seconds": time.perf_counter() - started})
    settings = {"split": asdict(split), "classifiers": asdict(cfg), "grids": grids,
                "feature_sets": [t.name for t in tables], "selected": list(classifiers)}
    body = {
        "seed": split.seed,
        "grouping": split.grouping,
        "config_hash": config_hash(settings),
        "settings": settings,
        "n_train_windows": int(train.sum()),
        "n_test_windows": int(test.sum()),
        "test_recordings": sorted({str(g) for g in base.groups[test]}),
        "results": rows,
    }
    return {"body": body, "timing": timing}


SUMMARY_COLUMNS = ("Feature Set", "Method", "Acc.", "F1-Score", "Prec.", "Recall")


def summary_rows(report: dict) -> list[list[str]]:
    out = []
    for r in report["body"]["results"]:
        out.append([r["feature_set"], r["method"], f"{r['accuracy']:.3f}", f"{r['f1']:.3f}",
                    f"{r['precision']:.3f}", f"{r['recall']:.3f}"])
    return out
