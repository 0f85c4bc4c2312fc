"""Emotion-aware placement of ads at scene boundaries.

A program is a sequence of N scenes with arousal/valence scores in [0, 1];
the N-1 boundaries between them are candidate insertion points. K distinct
ads go to K distinct boundaries, chosen to maximize the summed relevance
between each ad and the scene that precedes it, with a minimum amount of
program time between consecutive insertions.

Relevance defaults to affect matching,
``w_v * (1 - |dv|) + w_a * (1 - |da|)``; ``contrast=True`` rewards
distance instead. Ties resolve to the earliest breakpoints, then to the
smallest ad ids.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._io import format_float
from .dataset import ParseError
from .signal.hanjalic import AffectCurve, curve_mean

DEFAULT_WEIGHTS = (0.6, 0.4)  # (valence, arousal)
DEFAULT_SPACING_S = 60.0
EXACT_LIMIT = 1_000_000
TIE_EPS = 1e-9


class SchedulingError(ValueError):
    pass


class InfeasibleScheduleError(SchedulingError):
    def __init__(self, message: str, max_feasible_k: int):
        self.max_feasible_k = max_feasible_k
        super().__init__(f"{message}; at most {max_feasible_k} insertions are feasible")


class Scene(NamedTuple):
    id: str
    arousal: float
    valence: float
    length_s: float


class AdScore(NamedTuple):
    id: str
    arousal: float
    valence: float
    length_s: float = 0.0


@dataclass(frozen=True)
class SchedulingProblem:
    scenes: tuple[Scene, ...]
    ads: tuple[AdScore, ...]
    K: int

    def __post_init__(self):
        object.__setattr__(self, "scenes", tuple(Scene(*s) for s in self.scenes))
        object.__setattr__(self, "ads", tuple(AdScore(*a) for a in self.ads))
        if len(self.scenes) < 2 and self.K > 0:
            raise SchedulingError("need at least two scenes to have a breakpoint")
        for kind, items in (("scene", self.scenes), ("ad", self.ads)):
            ids = [x.id for x in items]
            if len(set(ids)) != len(ids):
                raise SchedulingError(f"duplicate {kind} ids")
            for x in items:
                if not (0.0 <= x.arousal <= 1.0 and 0.0 <= x.valence <= 1.0):
                    raise SchedulingError(f"{kind} {x.id}: affect scores must lie in [0, 1]")
                if x.length_s < 0:
                    raise SchedulingError(f"{kind} {x.id}: negative length")
        if self.K < 0 or self.K > min(self.n_breakpoints, len(self.ads)):
            raise SchedulingError(f"K={self.K} exceeds min(breakpoints={self.n_breakpoints}, "
                                  f"ads={len(self.ads)})")

    @property
    def n_breakpoints(self) -> int:
        return max(len(self.scenes) - 1, 0)

    def breakpoint_times(self) -> np.ndarray:
        """Program time (s) at each breakpoint: the end of scene i."""
        return np.cumsum([s.length_s for s in self.scenes])[:-1]


@dataclass(frozen=True)
class InsertionSchedule:
    assignments: tuple[tuple[int, str], ...]  # (breakpoint index, ad id)
    objective: float
    method: str

    def to_dict(self) -> dict:
        return {"assignments": [{"breakpoint": b, "ad_id": a} for b, a in self.assignments],
                "objective": self.objective, "method": self.method}


def relevance(scene: tuple[float, float], ad: tuple[float, float],
              weights: tuple[float, float] = DEFAULT_WEIGHTS, contrast: bool = False) -> float:
    """Score of placing an ad after a scene; both given as (arousal, valence)."""
    w_v, w_a = weights
    if w_v < 0 or w_a < 0 or not math.isclose(w_v + w_a, 1.0, abs_tol=1e-12):
        raise ValueError("weights must be nonnegative and sum to 1")
    da = abs(scene[0] - ad[0])
    dv = abs(scene[1] - ad[1])
    if contrast:
        return w_v * dv + w_a * da
    return w_v * (1.0 - dv) + w_a * (1.0 - da)


def relevance_matrix(problem: SchedulingProblem, weights=DEFAULT_WEIGHTS,
                     contrast: bool = False) -> np.ndarray:
    """Breakpoints x ads relevance; breakpoint i follows scene i."""
    return np.array([[relevance((s.arousal, s.valence), (a.arousal, a.valence), weights, contrast)
                      for a in problem.ads] for s in problem.scenes[:-1]]).reshape(
                          problem.n_breakpoints, len(problem.ads))


def max_feasible_k(times: Sequence[float], spacing_s: float) -> int:
    """Largest number of breakpoints that respect the spacing (earliest-first)."""
    count, last = 0, -math.inf
    for t in times:
        if t - last >= spacing_s:
            count, last = count + 1, t
    return count


def _spaced(times, subset, spacing_s) -> bool:
    return all(times[b] - times[a] >= spacing_s for a, b in zip(subset, subset[1:]))


def _best_assignment(rel: np.ndarray, rows: Sequence[int]) -> tuple[float, list[int]]:
    """Optimal distinct-column assignment for ``rows``, lexicographically
    smallest columns among optima (columns are pre-sorted by ad id)."""
    sub = rel[list(rows)]
    r, c = linear_sum_assignment(sub, maximize=True)
    best = math.fsum(sub[r, c])
    chosen: list[int] = []
    for p in range(len(rows)):
        for col in range(rel.shape[1]):
            if col in chosen:
                continue
            fixed = chosen + [col]
            rest_rows = list(range(p + 1, len(rows)))
            free = [k for k in range(rel.shape[1]) if k not in fixed]
            value = math.fsum(sub[q, fixed[q]] for q in range(p + 1))
            if rest_rows:
                rr, cc = linear_sum_assignment(sub[np.ix_(rest_rows, free)], maximize=True)
                value += math.fsum(sub[np.ix_(rest_rows, free)][rr, cc])
            if value >= best - TIE_EPS:
                chosen.append(col)
                break
    return math.fsum(sub[p, chosen[p]] for p in range(len(rows))), chosen


def solve_exact(rel: np.ndarray, times: Sequence[float], K: int,
                spacing_s: float) -> tuple[float, list[tuple[int, int]]]:
    """Enumerate spaced breakpoint subsets; assign ads optimally within each."""
    n_bp = rel.shape[0]
    if K == 0:
        return 0.0, []
    best_val, best = -math.inf, None
    for subset in itertools.combinations(range(n_bp), K):
        if not _spaced(times, subset, spacing_s):
            continue
        sub = rel[list(subset)]
        r, c = linear_sum_assignment(sub, maximize=True)
        val = math.fsum(sub[r, c])
        if val > best_val + TIE_EPS:
            best_val, best = val, subset
    if best is None:
        raise InfeasibleScheduleError(f"no {K} breakpoints satisfy the spacing",
                                      max_feasible_k(times, spacing_s))
    val, cols = _best_assignment(rel, best)
    return val, list(zip(best, cols))


def solve_greedy(rel: np.ndarray, times: Sequence[float], K: int,
                 spacing_s: float) -> tuple[float, list[tuple[int, int]]]:
    """Repeatedly take the best remaining (breakpoint, ad) pair that still
    leaves room for the insertions not yet placed."""
    if max_feasible_k(times, spacing_s) < K:
        raise InfeasibleScheduleError(f"no {K} breakpoints satisfy the spacing",
                                      max_feasible_k(times, spacing_s))
    chosen: list[tuple[int, int]] = []
    used_ads: set[int] = set()

    def compatible(b, taken):
        return all(abs(times[b] - times[t]) >= spacing_s for t in taken)

    while len(chosen) < K:
        taken = [b for b, _ in chosen]
        need = K - len(chosen) - 1
        best = None
        for b in range(rel.shape[0]):
            if b in taken or not compatible(b, taken):
                continue
            rest = [t for t in range(rel.shape[0])
                    if t not in taken and t != b and compatible(t, taken + [b])]
            if max_feasible_k([times[t] for t in rest], spacing_s) < need:
                continue
            for a in range(rel.shape[1]):
                if a in used_ads:
                    continue
                if best is None or rel[b, a] > rel[best] + TIE_EPS:
                    best = (b, a)
        chosen.append(best)
        used_ads.add(best[1])
    chosen.sort()
    return math.fsum(rel[b, a] for b, a in chosen), chosen


def exact_is_required(n_breakpoints: int, K: int) -> bool:
    return math.comb(n_breakpoints, K) * math.factorial(K) <= EXACT_LIMIT


def solve_schedule(problem: SchedulingProblem, weights=DEFAULT_WEIGHTS,
                   spacing_min_s: float = DEFAULT_SPACING_S, method: str = "auto",
                   contrast: bool = False) -> InsertionSchedule:
    """Choose K insertion points and ads.

    ``auto`` runs the exact search whenever C(N-1, K) * K! <= 10^6 and the
    greedy heuristic otherwise.
    """
    if method == "auto":
        method = "exact" if exact_is_required(problem.n_breakpoints, problem.K) else "greedy"
    if method not in ("exact", "greedy"):
        raise ValueError(f"unknown method {method!r}")
    order = sorted(range(len(problem.ads)), key=lambda i: problem.ads[i].id)
    rel = relevance_matrix(problem, weights, contrast)[:, order]
    times = problem.breakpoint_times()
    solver = solve_exact if method == "exact" else solve_greedy
    value, pairs = solver(rel, times, problem.K, spacing_min_s)
    assignments = tuple((int(b), problem.ads[order[a]].id) for b, a in pairs)
    return InsertionSchedule(assignments, value, method)


def validate_schedule(schedule: InsertionSchedule, problem: SchedulingProblem,
                      spacing_min_s: float = DEFAULT_SPACING_S) -> list[str]:
    """List every constraint the schedule breaks (empty when valid)."""
    problems = []
    bps = [b for b, _ in schedule.assignments]
    ads = [a for _, a in schedule.assignments]
    known = {a.id for a in problem.ads}
    if len(bps) != problem.K:
        problems.append(f"expected {problem.K} insertions, found {len(bps)}")
    if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
        problems.append("breakpoints are not strictly increasing")
    if len(set(ads)) != len(ads):
        problems.append("an ad is inserted more than once")
    for b in bps:
        if not 0 <= b < problem.n_breakpoints:
            problems.append(f"breakpoint {b} out of range")
    for a in ads:
        if a not in known:
            problems.append(f"unknown ad {a!r}")
    times = problem.breakpoint_times()
    valid_bps = sorted(b for b in bps if 0 <= b < problem.n_breakpoints)
    for b1, b2 in zip(valid_bps, valid_bps[1:]):
        if times[b2] - times[b1] < spacing_min_s:
            problems.append(f"breakpoints {b1} and {b2} are closer than {spacing_min_s} s")
    return problems


def schedule_report(schedule: InsertionSchedule, problem: SchedulingProblem,
                    weights=DEFAULT_WEIGHTS, contrast: bool = False) -> dict:
    """Per-insertion relevance, total objective and the composed timeline."""
    ads = {a.id: a for a in problem.ads}
    times = problem.breakpoint_times()
    insertions, timeline = [], []
    shift = 0.0
    rels = []
    for b, ad_id in schedule.assignments:
        scene, ad = problem.scenes[b], ads[ad_id]
        r = relevance((scene.arousal, scene.valence), (ad.arousal, ad.valence), weights, contrast)
        rels.append(r)
        insertions.append({"breakpoint": b, "after_scene": scene.id, "ad_id": ad_id,
                           "program_time_s": float(times[b]), "relevance": r})
        start = float(times[b]) + shift
        timeline.append({"ad_id": ad_id, "start_s": start, "end_s": start + ad.length_s})
        shift += ad.length_s
    return {"method": schedule.method, "K": problem.K, "objective": math.fsum(rels),
            "insertions": insertions, "timeline": timeline,
            "program_length_s": math.fsum(s.length_s for s in problem.scenes) + shift}


def score_ads(ad_ids: Sequence[str], curves: Mapping | None = None,
              posteriors: Mapping | None = None, manual: Mapping | None = None,
              window: str = "all") -> dict[str, tuple[float, float]]:
    """Per-ad (arousal, valence) in [0, 1] from exactly one kind of source.

    ``curves``: ad -> (arousal AffectCurve, valence AffectCurve), averaged
    over ``window``. ``posteriors``: ad -> (arousal probs, valence probs)
    per frame, averaged. ``manual``: ad -> (arousal, valence, arousal scale,
    valence scale), rescaled linearly onto [0, 1].
    """
    given = {k: v for k, v in (("curves", curves), ("posteriors", posteriors),
                               ("manual", manual)) if v is not None}
    if len(given) != 1:
        raise SchedulingError(f"use exactly one score source, got {sorted(given) or 'none'}")
    kind, source = next(iter(given.items()))
    missing = [a for a in ad_ids if a not in source]
    if missing:
        raise SchedulingError(f"no {kind} for ads: {', '.join(missing)}")
    out = {}
    for ad in ad_ids:
        if kind == "curves":
            a, v = source[ad]
            out[ad] = (curve_mean(a, window).value, curve_mean(v, window).value)
        elif kind == "posteriors":
            a, v = source[ad]
            if len(a) == 0 or len(v) == 0:
                raise SchedulingError(f"ad {ad}: empty posterior list")
            out[ad] = (math.fsum(a) / len(a), math.fsum(v) / len(v))
        else:
            a, v, (alo, ahi), (vlo, vhi) = source[ad]
            out[ad] = ((a - alo) / (ahi - alo), (v - vlo) / (vhi - vlo))
    return out


def _read_rows(path: str | Path, id_col: str) -> list[tuple]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = [id_col, "arousal", "valence", "length_s"]
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in need):
            raise ParseError(f"header must contain {', '.join(need)}", str(path), 1)
        rows = []
        for row in reader:
            try:
                rows.append((row[id_col], float(row["arousal"]), float(row["valence"]),
                             float(row["length_s"])))
            except (TypeError, ValueError) as exc:
                raise ParseError(str(exc), str(path), reader.line_num) from None
    return rows


def load_scenes(path: str | Path) -> list[Scene]:
    return [Scene(*r) for r in _read_rows(path, "scene_id")]


def load_ad_scores(path: str | Path) -> list[AdScore]:
    return [AdScore(*r) for r in _read_rows(path, "ad_id")]


def rows_to_csv(id_col: str, items: Sequence[tuple]) -> str:
    lines = [f"{id_col},arousal,valence,length_s"]
    for it in items:
        lines.append(",".join([it[0]] + [format_float(float(v)) for v in it[1:]]))
    return "\n".join(lines) + "\n"


def ad_score_from_curves(ad_id: str, arousal: AffectCurve, valence: AffectCurve,
                         window: str = "all") -> AdScore:
    a, v = score_ads([ad_id], curves={ad_id: (arousal, valence)}, window=window)[ad_id]
    return AdScore(ad_id, a, v, float(len(arousal.values)))
