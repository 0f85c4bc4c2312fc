"""Inter-rater agreement, correlation with FDR control and rank-sum tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Hashable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .dataset import AdRecord, RatingsTable

METRICS = ("nominal", "ordinal", "interval")
EXPERT_FIELD = {"A": "expert_arousal", "V": "expert_valence"}


class AgreementError(ValueError):
    pass


def _as_matrix(table, dim: str | None) -> np.ndarray:
    if isinstance(table, RatingsTable):
        if dim is None:
            raise AgreementError("dim is required when passing a RatingsTable")
        return np.asarray(table.scores[dim], dtype=float)
    mat = np.asarray(table, dtype=float)
    if mat.ndim != 2:
        raise AgreementError("reliability data must be raters x units")
    return mat


def coincidence_matrix(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coincidence matrix over the distinct observed values.

    ``data`` is raters x units with NaN for missing cells. Units with fewer
    than two ratings are not pairable and are dropped. Returns
    ``(values, o)`` where ``o[c, k]`` counts value pairs (c, k) within units,
    each unit weighted by ``1 / (m_u - 1)``.
    """
    data = np.asarray(data, dtype=float)
    present = ~np.isnan(data)
    m_u = present.sum(axis=0)
    keep = m_u >= 2
    if not keep.any():
        raise AgreementError("no unit has two or more ratings")
    data, present, m_u = data[:, keep], present[:, keep], m_u[keep]
    values = np.unique(data[present])
    # counts[u, c]: how many raters gave value c to unit u
    idx = np.searchsorted(values, np.where(present, data, values[0]))
    counts = np.zeros((data.shape[1], len(values)))
    for r in range(data.shape[0]):
        np.add.at(counts, (np.flatnonzero(present[r]), idx[r, present[r]]), 1.0)
    weights = 1.0 / (m_u - 1.0)
    o = np.einsum("u,uc,uk->ck", weights, counts, counts) - np.diag(weights @ counts)
    return values, o


def difference_matrix(values: np.ndarray, n_c: np.ndarray, metric: str) -> np.ndarray:
    """Squared difference function delta^2(c, k) for the given metric."""
    if metric == "nominal":
        return 1.0 - np.eye(len(values))
    if metric == "interval":
        return np.subtract.outer(values, values) ** 2
    if metric == "ordinal":
        cum = np.concatenate([[0.0], np.cumsum(n_c)])
        lo = np.minimum.outer(np.arange(len(values)), np.arange(len(values)))
        hi = np.maximum.outer(np.arange(len(values)), np.arange(len(values)))
        between = cum[hi + 1] - cum[lo]
        return (between - (n_c[lo] + n_c[hi]) / 2.0) ** 2
    raise AgreementError(f"unknown metric {metric!r}; choose from {METRICS}")


def krippendorff_alpha(table, dim: str | None = None, metric: str = "ordinal") -> float:
    """Krippendorff's alpha, ``1 - D_o / D_e``, from the coincidence matrix.

    Accepts a :class:`RatingsTable` plus dimension name, or a raw raters x
    units array with NaN for missing cells. Ordinal is the default metric.
    Returns 1.0 when there is no expected disagreement (every pairable
    rating identical).
    """
    if metric not in METRICS:
        raise AgreementError(f"unknown metric {metric!r}; choose from {METRICS}")
    data = _as_matrix(table, dim)
    if data.shape[0] < 2:
        raise AgreementError("need at least two raters")
    if np.isnan(data).all():
        raise AgreementError("all cells missing")
    values, o = coincidence_matrix(data)
    n_c = o.sum(axis=1)
    n = n_c.sum()
    delta = difference_matrix(values, n_c, metric)
    d_o = float((o * delta).sum())
    d_e = float((np.outer(n_c, n_c) * delta).sum()) / (n - 1.0)
    if d_e == 0.0:
        return 1.0
    return 1.0 - d_o / d_e


def cohen_kappa(labels_a: Sequence[Hashable], labels_b: Sequence[Hashable]) -> float:
    """Cohen's kappa between two labelings of the same items."""
    a, b = list(labels_a), list(labels_b)
    if len(a) != len(b):
        raise AgreementError(f"length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise AgreementError("need at least one item")
    n = len(a)
    cats = sorted(set(a) | set(b), key=repr)
    p_o = sum(x == y for x, y in zip(a, b)) / n
    p_e = math.fsum((a.count(c) / n) * (b.count(c) / n) for c in cats)
    if p_e == 1.0:
        return 1.0 if a == b else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def binarize_by_mean(scores: Sequence[float]) -> list[str]:
    """H for scores strictly above the mean, L otherwise (ties go to L).

    The comparison is done in exact rational arithmetic so the labels never
    depend on floating-point summation order.
    """
    vals = [float(s) for s in scores]
    if not vals:
        raise AgreementError("cannot binarize an empty sequence")
    if not all(math.isfinite(v) for v in vals):
        raise AgreementError("scores must be finite")
    mean = sum(map(Fraction, vals), Fraction(0)) / len(vals)
    return ["H" if Fraction(v) > mean else "L" for v in vals]


@dataclass(frozen=True)
class AgreementReport:
    krippendorff_alpha: dict[str, float]
    cohen_kappa_per_rater: dict[str, dict[str, float]]
    population_kappa: dict[str, float]
    method_notes: str
    metric: str = "ordinal"

    def to_dict(self) -> dict:
        return {
            "krippendorff_alpha": self.krippendorff_alpha,
            "cohen_kappa_per_rater": self.cohen_kappa_per_rater,
            "mean_cohen_kappa": {d: (math.fsum(k.values()) / len(k) if k else None)
                                 for d, k in self.cohen_kappa_per_rater.items()},
            "population_kappa": self.population_kappa,
            "metric": self.metric,
            "method_notes": self.method_notes,
        }


def rater_kappa(table: RatingsTable, dim: str, ads: Sequence[AdRecord]) -> dict[str, float]:
    """Kappa of each rater's mean-thresholded labels against the expert labels."""
    truth = _expert_labels(table, dim, ads)
    out = {}
    mat = table.scores[dim]
    for i, rater in enumerate(table.raters):
        keep = ~np.isnan(mat[i])
        if keep.sum() == 0:
            continue
        labels = binarize_by_mean(mat[i, keep])
        out[rater] = cohen_kappa(labels, [t for t, k in zip(truth, keep) if k])
    return out


def population_kappa(table: RatingsTable, dim: str, ads: Sequence[AdRecord]) -> float:
    """Kappa of per-ad mean ratings thresholded at the grand mean, against experts."""
    truth = _expert_labels(table, dim, ads)
    mat = table.scores[dim]
    keep = ~np.isnan(mat).all(axis=0)
    means = [math.fsum(col[~np.isnan(col)]) / int((~np.isnan(col)).sum())
             for col in mat.T[keep]]
    return cohen_kappa(binarize_by_mean(means), [t for t, k in zip(truth, keep) if k])


def _expert_labels(table: RatingsTable, dim: str, ads: Sequence[AdRecord]) -> list[str]:
    if dim not in EXPERT_FIELD:
        raise AgreementError(f"no expert labels exist for dimension {dim}")
    by_id = {a.id: a for a in ads}
    missing = [a for a in table.ads if a not in by_id]
    if missing:
        raise AgreementError(f"no ad record for {missing}")
    return [getattr(by_id[a], EXPERT_FIELD[dim]) for a in table.ads]


def agreement_report(table: RatingsTable, dims: Sequence[str] | None = None,
                     ads: Sequence[AdRecord] | None = None,
                     metric: str = "ordinal") -> AgreementReport:
    dims = list(dims or table.dims)
    alpha = {d: krippendorff_alpha(table, d, metric) for d in dims}
    per_rater: dict[str, dict[str, float]] = {}
    pop: dict[str, float] = {}
    if ads is not None:
        for d in dims:
            if d in EXPERT_FIELD:
                per_rater[d] = rater_kappa(table, d, ads)
                pop[d] = population_kappa(table, d, ads)
    notes = (f"Krippendorff alpha with {metric} difference metric over the coincidence matrix; "
             "missing cells skipped, units with <2 ratings dropped. "
             "Kappa: each rater's scores thresholded at that rater's mean (ties -> L) and "
             "compared with expert labels; population kappa thresholds per-ad mean ratings "
             "at the grand mean.")
    if ads is None:
        notes += " No ad records supplied, kappa not computed."
    return AgreementReport(alpha, per_rater, pop, notes, metric)


# -- correlations -----------------------------------------------------------

def benjamini_hochberg(p_values: Sequence[float], q: float = 0.05) -> np.ndarray:
    """Boolean rejection mask of the BH step-up procedure at FDR level ``q``."""
    p = np.asarray(p_values, dtype=float)
    if p.ndim != 1:
        raise ValueError("p_values must be one-dimensional")
    if np.isnan(p).any() or (p < 0).any() or (p > 1).any():
        raise ValueError("p-values must lie in [0, 1]")
    m = len(p)
    reject = np.zeros(m, dtype=bool)
    if m == 0:
        return reject
    order = np.argsort(p, kind="stable")
    passed = p[order] <= q * np.arange(1, m + 1) / m
    if passed.any():
        k = int(np.flatnonzero(passed)[-1])
        reject[order[: k + 1]] = True
    return reject


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float | None, float | None]:
    """Pearson r and two-sided p-value (t distribution, n-2 df).

    Returns ``(None, None)`` when either variable has zero variance or fewer
    than three paired observations are available.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = ~(np.isnan(x) | np.isnan(y))
    x, y = x[keep], y[keep]
    n = len(x)
    if n < 3:
        return None, None
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return None, None
    r = float(np.clip((dx @ dy) / (math.sqrt(sxx) * math.sqrt(syy)), -1.0, 1.0))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, float(min(1.0, 2.0 * stats.t.sf(abs(t), n - 2)))


@dataclass(frozen=True)
class CorrelationPair:
    dim_i: str
    dim_j: str
    pearson_r: float | None
    p_value: float | None
    significant_after_fdr: bool
    per_rater: list[dict] = field(default_factory=list)


@dataclass(frozen=True)
class CorrelationReport:
    pairs: list[CorrelationPair]
    fdr_q: float = 0.05

    def matrix(self) -> tuple[list[str], np.ndarray]:
        """Symmetric matrix of mean r with unit diagonal; NaN where undefined."""
        dims = list(dict.fromkeys([d for p in self.pairs for d in (p.dim_i, p.dim_j)]))
        pos = {d: k for k, d in enumerate(dims)}
        mat = np.eye(len(dims))
        for p in self.pairs:
            v = math.nan if p.pearson_r is None else p.pearson_r
            mat[pos[p.dim_i], pos[p.dim_j]] = mat[pos[p.dim_j], pos[p.dim_i]] = v
        return dims, mat

    def to_dict(self) -> dict:
        return {"fdr_q": self.fdr_q,
                "pairs": [p.__dict__ for p in self.pairs],
                "notes": "r averaged over raters; p_value is the largest per-rater p; "
                         "a pair is significant when BH (over all rater x pair tests) "
                         "rejects it for every rater with a defined r."}


def pearson_with_fdr(table: RatingsTable, q: float = 0.05,
                     dims: Sequence[str] | None = None) -> CorrelationReport:
    """Per-rater Pearson correlations between dimensions, averaged over raters.

    Every (rater, dimension pair) test enters one Benjamini-Hochberg family.
    """
    if len(table.ads) < 3:
        raise AgreementError("need at least three ads")
    dims = list(dims or table.dims)
    tests = []
    for di, dj in combinations(dims, 2):
        for r_idx, rater in enumerate(table.raters):
            r, p = pearson(table.scores[di][r_idx], table.scores[dj][r_idx])
            tests.append((di, dj, rater, r, p))
    defined = [k for k, t in enumerate(tests) if t[4] is not None]
    rejected = np.zeros(len(tests), dtype=bool)
    if defined:
        rejected[defined] = benjamini_hochberg([tests[k][4] for k in defined], q)
    pairs = []
    for di, dj in combinations(dims, 2):
        rows = [(t, bool(rejected[k])) for k, t in enumerate(tests) if t[0] == di and t[1] == dj]
        good = [(t, rej) for t, rej in rows if t[3] is not None]
        per_rater = [{"rater": t[2], "r": t[3], "p": t[4], "rejected": rej} for t, rej in rows]
        if good:
            mean_r = math.fsum(t[3] for t, _ in good) / len(good)
            p_max = max(t[4] for t, _ in good)
            sig = all(rej for _, rej in good)
        else:
            mean_r, p_max, sig = None, None, False
        pairs.append(CorrelationPair(di, dj, mean_r, p_max, sig, per_rater))
    return CorrelationReport(pairs, q)


# -- rank-sum test ----------------------------------------------------------

class RankSumResult(NamedTuple):
    statistic: float
    p_value: float


def _ranksum_parts(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 1 or len(y) < 1:
        raise ValueError("both samples must be nonempty")
    pooled = np.concatenate([x, y])
    ranks = stats.rankdata(pooled)  # midranks for ties
    return ranks, len(x), len(y)


def ranksum_normal_p(x: Sequence[float], y: Sequence[float]) -> RankSumResult:
    """Rank-sum W of ``x`` with a tie-corrected, continuity-corrected normal p."""
    ranks, n1, n2 = _ranksum_parts(x, y)
    n = n1 + n2
    w = float(ranks[:n1].sum())
    mu = n1 * (n + 1) / 2.0
    _, t = np.unique(ranks, return_counts=True)
    tie = float((t ** 3 - t).sum()) / (n * (n - 1)) if n > 1 else 0.0
    var = n1 * n2 / 12.0 * ((n + 1) - tie)
    if var <= 0.0:
        return RankSumResult(w, 1.0)
    z = max(abs(w - mu) - 0.5, 0.0) / math.sqrt(var)
    return RankSumResult(w, float(min(1.0, 2.0 * stats.norm.sf(z))))


def ranksum_exact_p(x: Sequence[float], y: Sequence[float]) -> RankSumResult:
    """Exact permutation p, ``P(|W - mu| >= |w - mu|)``, by counting subset sums.

    Ranks are doubled so that midranks become integers and the counting DP
    stays exact.
    """
    ranks, n1, n2 = _ranksum_parts(x, y)
    n = n1 + n2
    if n > 60:
        raise ValueError("exact enumeration limited to n1 + n2 <= 60")
    r2 = np.rint(2 * ranks).astype(int)
    w2 = int(r2[:n1].sum())
    total = int(r2.sum())
    # counts[k][s]: number of k-subsets of the pooled ranks with doubled sum s
    counts = [dict() for _ in range(n1 + 1)]
    counts[0][0] = 1
    for r in r2:
        for k in range(min(n1, n) - 1, -1, -1):
            for s, c in list(counts[k].items()):
                counts[k + 1][s + r] = counts[k + 1].get(s + r, 0) + c
    dist = counts[n1]
    two_mu2 = n1 * total  # 2 * (doubled mean) * n, kept in integers
    obs = abs(n * w2 - two_mu2)
    hits = sum(c for s, c in dist.items() if abs(n * s - two_mu2) >= obs)
    return RankSumResult(w2 / 2.0, hits / sum(dist.values()))


def wilcoxon_ranksum(x: Sequence[float], y: Sequence[float],
                     method: str = "auto") -> RankSumResult:
    """Two-sided Wilcoxon rank-sum test.

    ``method="auto"`` enumerates exactly when ``len(x) + len(y) <= 10`` and
    uses the normal approximation otherwise. If every value is tied the
    p-value is 1.
    """
    if method == "auto":
        method = "exact" if len(x) + len(y) <= 10 else "normal"
    if method == "exact":
        return ranksum_exact_p(x, y)
    if method == "normal":
        return ranksum_normal_p(x, y)
    raise ValueError(f"unknown method {method!r}")
