"""Repeated k-fold cross-validation at the ad level.

Frames of one ad never straddle train and test: folds are drawn over ad ids,
stratified by ad label. Each ad's prediction is the majority vote of its
frame predictions (ties go to -1 / L). SVM hyperparameters are chosen by an
inner k-fold search on the training ads only.

Every (repetition, fold) task draws from its own ``SeedSequence`` child, so
results do not depend on how many workers run them.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ..dataset import FeatureTable
from .lda import train_lda
from .metrics import UndefinedMetricWarning, accuracy, f1_score
from .model import ClassifierModel
from .svm import train_svm

LOG_GRID = tuple(10.0 ** k for k in range(-3, 4))
WINDOWS = ("all", "l3", "l")


class CvError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "rsvm"
    C: float = 1.0
    gamma: float | None = None
    shrinkage: float = 0.1
    tune: bool = True
    C_grid: tuple[float, ...] = LOG_GRID
    gamma_grid: tuple[float, ...] = LOG_GRID

    def __post_init__(self):
        if self.kind not in ("lda", "lsvm", "rsvm"):
            raise ValueError(f"unknown classifier {self.kind!r}")

    def grid(self) -> list[dict]:
        if self.kind == "lda" or not self.tune:
            return [self.fixed_params()]
        if self.kind == "lsvm":
            return [{"C": c} for c in self.C_grid]
        return [{"C": c, "gamma": g} for c in self.C_grid for g in self.gamma_grid]

    def fixed_params(self) -> dict:
        if self.kind == "lda":
            return {"shrinkage": self.shrinkage}
        if self.kind == "lsvm":
            return {"C": self.C}
        return {"C": self.C, "gamma": self.gamma}


def fit_classifier(kind: str, X, y, params: dict) -> ClassifierModel:
    if kind == "lda":
        return train_lda(X, y, params.get("shrinkage", 0.0))
    if kind == "lsvm":
        return train_svm(X, y, "linear", C=params["C"])
    gamma = params.get("gamma") or 1.0 / X.shape[1]
    return train_svm(X, y, "rbf", C=params["C"], gamma=gamma)


def select_window(table: FeatureTable, window: str) -> FeatureTable:
    """Keep all frames, the last three (``l3``) or the last one (``l``) per ad."""
    if window not in WINDOWS:
        raise CvError(f"unknown window {window!r}; choose from {WINDOWS}")
    if window == "all":
        return table
    keep_n = 3 if window == "l3" else 1
    keep = np.zeros(len(table), dtype=bool)
    rows_by_ad: dict[str, list[int]] = {}
    for i, ad in enumerate(table.ad_ids):
        rows_by_ad.setdefault(ad, []).append(i)
    for rows in rows_by_ad.values():
        rows = sorted(rows, key=lambda i: table.frame_index[i])
        keep[rows[-keep_n:]] = True
    return table.subset(keep)


def stratified_ad_folds(ad_labels: dict[str, int], n_folds: int,
                        rng: np.random.Generator) -> list[list[str]]:
    """Split ads into folds, dealing each class round-robin after a shuffle."""
    folds: list[list[str]] = [[] for _ in range(n_folds)]
    offset = 0
    for label in (1, -1):
        ads = sorted(a for a, lab in ad_labels.items() if lab == label)
        if len(ads) < n_folds:
            raise CvError(f"class {label:+d} has {len(ads)} ads; need at least {n_folds} "
                          "so that every fold sees both classes")
        order = rng.permutation(len(ads))
        for k, idx in enumerate(order):
            folds[(k + offset) % n_folds].append(ads[idx])
        offset += len(ads)
    return [sorted(f) for f in folds]


def vote(ad_ids: Sequence[str], frame_pred: np.ndarray) -> dict[str, int]:
    """Majority vote per ad; a tie is -1."""
    totals: dict[str, int] = {}
    for ad, p in zip(ad_ids, frame_pred):
        totals[ad] = totals.get(ad, 0) + int(p)
    return {ad: (1 if s > 0 else -1) for ad, s in totals.items()}


def _ad_scores(table: FeatureTable, train_ads, test_ads, kind, params):
    train = np.isin(table.ad_ids, list(train_ads))
    test = np.isin(table.ad_ids, list(test_ads))
    model = fit_classifier(kind, table.X[train], table.y[train], params)
    pred = vote([table.ad_ids[i] for i in np.flatnonzero(test)], model.predict(table.X[test]))
    labels = table.ad_labels()
    ads = sorted(pred)
    p = np.array([pred[a] for a in ads])
    t = np.array([labels[a] for a in ads])
    return accuracy(p, t), f1_score(p, t)


def _tune(table: FeatureTable, train_ads: list[str], spec: ClassifierSpec, inner_folds: int,
          rng: np.random.Generator) -> dict:
    grid = spec.grid()
    if len(grid) == 1:
        return grid[0]
    labels = table.ad_labels()
    sub = {a: labels[a] for a in train_ads}
    k = min(inner_folds, sum(v == 1 for v in sub.values()), sum(v == -1 for v in sub.values()))
    if k < 2:
        return spec.fixed_params()
    folds = stratified_ad_folds(sub, k, rng)
    best, best_score = grid[0], -np.inf
    for params in grid:
        scores = []
        for f in range(k):
            tr = [a for g, fold in enumerate(folds) if g != f for a in fold]
            scores.append(_ad_scores(table, tr, folds[f], spec.kind, params)[1])
        score = float(np.mean(scores))
        if score > best_score:
            best, best_score = params, score
    return best


@dataclass(frozen=True)
class RunResult:
    repeat: int
    fold: int
    accuracy: float
    f1: float
    params: dict


@dataclass(frozen=True)
class CvReport:
    runs: list[RunResult]
    window: str
    classifier: dict
    seed: int
    n_repeats: int
    n_folds: int
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"window": self.window, "classifier": self.classifier, "seed": self.seed,
                "n_repeats": self.n_repeats, "n_folds": self.n_folds,
                "summary": self.summary, "runs": [asdict(r) for r in self.runs]}


def _run_task(args):
    table, spec, seed, rep, fold, n_folds, inner_folds = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedMetricWarning)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))
        folds = stratified_ad_folds(table.ad_labels(), n_folds, rng)
        test = folds[fold]
        train = [a for g, f in enumerate(folds) if g != fold for a in f]
        inner_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep, fold)))
        params = _tune(table, train, spec, inner_folds, inner_rng)
        acc, f1 = _ad_scores(table, train, test, spec.kind, params)
    return RunResult(rep, fold, acc, f1, params)


def cross_validate(table: FeatureTable, spec: ClassifierSpec, window: str = "all",
                   seed: int = 0, n_repeats: int = 10, n_folds: int = 5,
                   inner_folds: int = 5, jobs: int = 1) -> CvReport:
    """``n_repeats`` x ``n_folds`` cross-validation; 50 runs by default."""
    table = select_window(table, window)
    table.ad_labels()  # frames of one ad must agree
    tasks = [(table, spec, seed, r, f, n_folds, inner_folds)
             for r in range(n_repeats) for f in range(n_folds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_run_task, tasks))
    else:
        runs = [_run_task(t) for t in tasks]
    acc = np.array([r.accuracy for r in runs])
    f1 = np.array([r.f1 for r in runs])
    summary = {"accuracy_mean": float(acc.mean()), "accuracy_std": float(acc.std()),
               "f1_mean": float(f1.mean()), "f1_std": float(f1.std()), "n_runs": len(runs)}
    return CvReport(runs, window, asdict(spec), seed, n_repeats, n_folds, summary)


def curve_summary_features(values: Sequence[float], window: str = "all") -> np.ndarray:
    """Mean, standard deviation and maximum of a per-second curve over a window
    (``all``, ``l3`` = final 30 s, ``l`` = final 10 s)."""
    v = np.asarray(values, dtype=float)
    span = {"all": None, "l3": 30, "l": 10}[window]
    if span is not None:
        v = v[-span:]
    return np.array([v.mean(), v.std(), v.max()])
