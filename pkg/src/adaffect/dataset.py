"""Core record types and CSV ingestion.

Three file formats are handled here (see ``docs/formats.md``):

* ratings, long format ``ad_id,rater_id,A,V,E`` with empty cells for missing
  scores and an optional ``# scales: A=0:4 V=-2:2 E=0:4`` comment line;
* ad records ``ad_id,duration_s,arousal,valence[,caption][,n_experts]``;
* frame features ``ad_id,frame_index,task_id,label,f0,...,f{d-1}``.

H/L labels live in files as strings and are mapped to +1/-1 only here.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._io import atomic_write_text, format_float

DEFAULT_SCALES: dict[str, tuple[int, int]] = {"A": (0, 4), "V": (-2, 2), "E": (0, 4)}
QUADRANTS = ("HAHV", "LAHV", "LALV", "HALV")
LABELS = ("H", "L")


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ValidationError(ValueError):
    """Input parsed but violates a declared constraint."""

    def __init__(self, message: str, *, rater: str | None = None, ad: str | None = None,
                 dim: str | None = None):
        self.rater = rater
        self.ad = ad
        self.dim = dim
        super().__init__(message)


def label_to_sign(label: str) -> int:
    if label == "H":
        return 1
    if label == "L":
        return -1
    raise ValueError(f"label must be 'H' or 'L', got {label!r}")


def sign_to_label(sign: int) -> str:
    return "H" if sign > 0 else "L"


def quadrant_of(arousal: str, valence: str) -> str:
    if arousal not in LABELS or valence not in LABELS:
        raise ValueError(f"bad quadrant labels ({arousal!r}, {valence!r})")
    return f"{arousal}A{valence}V"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AdRecord:
    id: str
    duration_s: float
    expert_arousal: str
    expert_valence: str
    caption_text: str | None = None
    n_experts: int | None = None

    def __post_init__(self):
        if not (self.duration_s > 0 and math.isfinite(self.duration_s)):
            raise ValidationError(f"ad {self.id}: duration must be positive, got {self.duration_s}",
                                  ad=self.id)
        for lab in (self.expert_arousal, self.expert_valence):
            if lab not in LABELS:
                raise ValidationError(f"ad {self.id}: expert label must be H or L, got {lab!r}",
                                      ad=self.id)

    @property
    def quadrant(self) -> str:
        return quadrant_of(self.expert_arousal, self.expert_valence)


@dataclass(frozen=True, eq=False)
class RatingsTable:
    """Raters x ads score matrices, one per dimension; NaN marks a missing cell."""

    raters: tuple[str, ...]
    ads: tuple[str, ...]
    scores: Mapping[str, np.ndarray]
    scales: Mapping[str, tuple[int, int]] = field(default_factory=lambda: dict(DEFAULT_SCALES))

    def __post_init__(self):
        object.__setattr__(self, "raters", tuple(self.raters))
        object.__setattr__(self, "ads", tuple(self.ads))
        if not self.ads:
            raise ValidationError("no ads")
        if not self.raters:
            raise ValidationError("no raters")
        if len(set(self.raters)) != len(self.raters):
            raise ValidationError("duplicate rater ids")
        if len(set(self.ads)) != len(self.ads):
            raise ValidationError("duplicate ad ids")
        scores = {}
        for dim, mat in self.scores.items():
            if dim not in self.scales:
                raise ValidationError(f"dimension {dim} has no declared scale", dim=dim)
            mat = np.asarray(mat, dtype=float)
            if mat.shape != (len(self.raters), len(self.ads)):
                raise ValidationError(
                    f"dimension {dim}: expected shape {(len(self.raters), len(self.ads))}, "
                    f"got {mat.shape}", dim=dim)
            lo, hi = self.scales[dim]
            bad = ~np.isnan(mat) & ((mat < lo) | (mat > hi) | (mat != np.round(mat)))
            if bad.any():
                i, j = map(int, np.argwhere(bad)[0])
                raise ValidationError(
                    f"score {mat[i, j]:g} for rater {self.raters[i]}, ad {self.ads[j]}, "
                    f"dimension {dim} is not an integer step of scale [{lo}, {hi}]",
                    rater=self.raters[i], ad=self.ads[j], dim=dim)
            scores[dim] = _readonly(mat)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "scales", {k: (int(v[0]), int(v[1]))
                                           for k, v in self.scales.items() if k in scores})

    @property
    def dims(self) -> tuple[str, ...]:
        return tuple(self.scores)

    def __getitem__(self, dim: str) -> np.ndarray:
        return self.scores[dim]

    def __eq__(self, other):
        if not isinstance(other, RatingsTable):
            return NotImplemented
        return (self.raters == other.raters and self.ads == other.ads
                and dict(self.scales) == dict(other.scales)
                and self.dims == other.dims
                and all(np.array_equal(self.scores[d], other.scores[d], equal_nan=True)
                        for d in self.dims))

    __hash__ = None

    def permuted(self, rater_order: Sequence[int] | None = None,
                 ad_order: Sequence[int] | None = None) -> "RatingsTable":
        ri = np.arange(len(self.raters)) if rater_order is None else np.asarray(rater_order)
        ai = np.arange(len(self.ads)) if ad_order is None else np.asarray(ad_order)
        return RatingsTable(
            raters=[self.raters[i] for i in ri],
            ads=[self.ads[j] for j in ai],
            scores={d: m[np.ix_(ri, ai)] for d, m in self.scores.items()},
            scales=self.scales,
        )


_SCALE_RE = re.compile(r"([A-Za-z_]\w*)\s*=\s*(-?\d+)\s*:\s*(-?\d+)")


def _parse_scale_comment(line: str) -> dict[str, tuple[int, int]]:
    body = line.lstrip("#").strip()
    if not body.lower().startswith("scales"):
        return {}
    return {m.group(1): (int(m.group(2)), int(m.group(3))) for m in _SCALE_RE.finditer(body)}


def load_ratings(path: str | Path,
                 schema: Mapping[str, tuple[int, int]] | None = None) -> RatingsTable:
    """Read a long-format ratings CSV.

    ``schema`` maps dimension name to its (min, max) scale. A ``# scales:``
    comment in the file overrides the defaults, and ``schema`` overrides both.
    Ads and raters keep their order of first appearance.
    """
    path = str(path)
    scales = dict(DEFAULT_SCALES)
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    body: list[tuple[int, str]] = []
    for lineno, line in enumerate(lines, start=1):
        if line.startswith("#"):
            scales.update(_parse_scale_comment(line))
        elif line.strip():
            body.append((lineno, line))
    if schema:
        scales.update(schema)
    if not body:
        raise ParseError("missing header", path)
    header_line, header_text = body[0]
    header = [h.strip() for h in next(csv.reader([header_text]))]
    if header[:2] != ["ad_id", "rater_id"] or len(header) < 3:
        raise ParseError("header must start with ad_id,rater_id followed by dimensions",
                         path, header_line)
    dims = header[2:]
    for d in dims:
        if d not in scales:
            raise ParseError(f"dimension {d} has no declared scale", path, header_line)

    ads: dict[str, int] = {}
    raters: dict[str, int] = {}
    cells: dict[tuple[str, str], list[float]] = {}
    for lineno, line in body[1:]:
        row = next(csv.reader([line]))
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", path, lineno)
        ad, rater = row[0].strip(), row[1].strip()
        if not ad or not rater:
            raise ParseError("empty ad_id or rater_id", path, lineno)
        if (ad, rater) in cells:
            raise ParseError(f"duplicate rating for ad {ad}, rater {rater}", path, lineno)
        vals = []
        for d, cell in zip(dims, row[2:]):
            cell = cell.strip()
            if cell == "":
                vals.append(math.nan)
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(f"non-numeric score {cell!r} for dimension {d}",
                                 path, lineno) from None
        ads.setdefault(ad, len(ads))
        raters.setdefault(rater, len(raters))
        cells[(ad, rater)] = vals
    if not ads:
        raise ValidationError("no ads")

    mats = {d: np.full((len(raters), len(ads)), math.nan) for d in dims}
    for (ad, rater), vals in cells.items():
        for d, v in zip(dims, vals):
            mats[d][raters[rater], ads[ad]] = v
    return RatingsTable(raters=list(raters), ads=list(ads), scores=mats,
                        scales={d: scales[d] for d in dims})


def save_ratings(table: RatingsTable, path: str | Path) -> Path:
    dims = table.dims
    out = ["# scales: " + " ".join(f"{d}={table.scales[d][0]}:{table.scales[d][1]}" for d in dims),
           ",".join(["ad_id", "rater_id", *dims])]
    for j, ad in enumerate(table.ads):
        for i, rater in enumerate(table.raters):
            cells = []
            for d in dims:
                v = table.scores[d][i, j]
                cells.append("" if math.isnan(v) else str(int(v)))
            out.append(",".join([ad, rater, *cells]))
    return atomic_write_text(path, "\n".join(out) + "\n")


def load_ads(path: str | Path) -> list[AdRecord]:
    """Read ad records: ``ad_id,duration_s,arousal,valence[,caption][,n_experts]``."""
    path = str(path)
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"ad_id", "duration_s", "arousal", "valence"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ParseError(f"header must contain {sorted(required)}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            try:
                n_exp = row.get("n_experts") or None
                records.append(AdRecord(
                    id=row["ad_id"].strip(),
                    duration_s=float(row["duration_s"]),
                    expert_arousal=row["arousal"].strip(),
                    expert_valence=row["valence"].strip(),
                    caption_text=(row.get("caption") or None),
                    n_experts=int(n_exp) if n_exp else None,
                ))
            except (TypeError, ValueError) as exc:
                if isinstance(exc, ValidationError):
                    raise
                raise ParseError(str(exc), path, lineno) from None
    if not records:
        raise ValidationError("no ads")
    return records


def save_ads(ads: Iterable[AdRecord], path: str | Path) -> Path:
    sio = io.StringIO()
    w = csv.writer(sio, lineterminator="\n")
    for ad in ads:
        w.writerow([ad.id, format_float(ad.duration_s), ad.expert_arousal, ad.expert_valence,
                    ad.caption_text or "", "" if ad.n_experts is None else ad.n_experts])
    return atomic_write_text(path, "ad_id,duration_s,arousal,valence,caption,n_experts\n"
                             + sio.getvalue())


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """Per-frame descriptors with +1/-1 labels and task ids."""

    ad_ids: tuple[str, ...]
    frame_index: np.ndarray
    task_id: np.ndarray
    X: np.ndarray
    y: np.ndarray
    n_tasks: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "ad_ids", tuple(self.ad_ids))
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise ValidationError("features must be a 2-D array")
        n = X.shape[0]
        if n == 0:
            raise ValidationError("feature table has no rows")
        if X.shape[1] < 1:
            raise ValidationError("feature dimension must be positive")
        if not np.isfinite(X).all():
            r = int(np.argwhere(~np.isfinite(X))[0][0])
            raise ValidationError(f"non-finite feature value in row {r} (ad {self.ad_ids[r]})",
                                  ad=self.ad_ids[r])
        fi = np.asarray(self.frame_index, dtype=np.int64)
        ti = np.asarray(self.task_id, dtype=np.int64)
        y = np.asarray(self.y, dtype=np.int64)
        if not (len(self.ad_ids) == len(fi) == len(ti) == len(y) == n):
            raise ValidationError("column lengths disagree")
        if (fi < 0).any():
            raise ValidationError("frame_index must be non-negative")
        if not np.isin(y, (-1, 1)).all():
            raise ValidationError("labels must be +1/-1")
        n_tasks = int(ti.max()) + 1 if self.n_tasks is None else int(self.n_tasks)
        if (ti < 0).any() or (ti >= n_tasks).any():
            raise ValidationError(f"task_id outside 0..{n_tasks - 1}")
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "frame_index", _readonly(fi))
        object.__setattr__(self, "task_id", _readonly(ti))
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "n_tasks", n_tasks)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FeatureTable):
            return NotImplemented
        return (self.ad_ids == other.ad_ids and self.n_tasks == other.n_tasks
                and np.array_equal(self.frame_index, other.frame_index)
                and np.array_equal(self.task_id, other.task_id)
                and np.array_equal(self.X, other.X) and np.array_equal(self.y, other.y))

    __hash__ = None

    def ads(self) -> list[str]:
        """Distinct ad ids in order of first appearance."""
        return list(dict.fromkeys(self.ad_ids))

    def ad_labels(self) -> dict[str, int]:
        """One label per ad; raises if an ad's frames disagree."""
        out: dict[str, int] = {}
        for ad, lab in zip(self.ad_ids, self.y):
            if out.setdefault(ad, int(lab)) != lab:
                raise ValidationError(f"ad {ad} has frames with conflicting labels", ad=ad)
        return out

    def subset(self, mask: np.ndarray) -> "FeatureTable":
        mask = np.asarray(mask)
        idx = np.flatnonzero(mask) if mask.dtype == bool else mask
        return FeatureTable(
            ad_ids=[self.ad_ids[i] for i in idx],
            frame_index=self.frame_index[idx],
            task_id=self.task_id[idx],
            X=self.X[idx],
            y=self.y[idx],
            n_tasks=self.n_tasks,
        )

    def by_task(self, task: int) -> "FeatureTable":
        return self.subset(self.task_id == task)


_FCOL = re.compile(r"f(\d+)$")


def load_features(path: str | Path, n_tasks: int | None = None) -> FeatureTable:
    """Read a CSV (or TSV, detected from the header) feature table; row order is file order."""
    path = str(path)
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
        delim = "\t" if "\t" in first else ","
        fh.seek(0)
        reader = csv.reader(fh, delimiter=delim)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("missing header", path, 1) from None
        if header[:4] != ["ad_id", "frame_index", "task_id", "label"] or len(header) < 5:
            raise ParseError("header must be ad_id,frame_index,task_id,label,f0,...", path, 1)
        for k, h in enumerate(header[4:]):
            m = _FCOL.match(h)
            if m is None or int(m.group(1)) != k:
                raise ParseError(f"feature column {k} must be named f{k}, got {h!r}", path, 1)
        width = len(header)
        ad_ids, frames, tasks, labels, rows = [], [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != width:
                raise ParseError(f"ragged row: expected {width} fields, got {len(row)}",
                                 path, lineno)
            try:
                frames.append(int(row[1]))
                tasks.append(int(row[2]))
                labels.append(label_to_sign(row[3].strip()))
                vals = [float(v) for v in row[4:]]
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise ValidationError(f"{path}:{lineno}: non-finite feature value", ad=row[0])
            ad_ids.append(row[0].strip())
            rows.append(vals)
    if not rows:
        raise ValidationError("feature table has no rows")
    return FeatureTable(ad_ids=ad_ids, frame_index=np.array(frames), task_id=np.array(tasks),
                        X=np.array(rows, dtype=float), y=np.array(labels), n_tasks=n_tasks)


def save_features(table: FeatureTable, path: str | Path) -> Path:
    header = ["ad_id", "frame_index", "task_id", "label"] + [f"f{k}" for k in range(table.d)]
    lines = [",".join(header)]
    for i in range(len(table)):
        lines.append(",".join([table.ad_ids[i], str(int(table.frame_index[i])),
                               str(int(table.task_id[i])), sign_to_label(int(table.y[i])),
                               *(format_float(v) for v in table.X[i])]))
    return atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class QuadrantStats:
    n_ads: int
    length_s: float | None
    A: float | None
    V: float | None
    E: float | None


def _fmean(values) -> float | None:
    vals = [float(v) for v in values if not math.isnan(v)]
    if not vals:
        return None
    # fsum is exactly rounded, so the result does not depend on summation order
    return math.fsum(vals) / len(vals)


def quadrant_summary(table: RatingsTable, ads: Sequence[AdRecord]) -> dict[str, QuadrantStats]:
    """Mean duration and mean A/V/E rating per expert quadrant.

    Ratings are pooled over all raters and all ads of the quadrant. A quadrant
    with no ads reports ``None`` rather than zero.
    """
    by_id = {a.id: a for a in ads}
    missing = [ad for ad in table.ads if ad not in by_id]
    if missing:
        raise ValidationError(f"no ad record for {missing}", ad=missing[0])
    out = {}
    for quad in QUADRANTS:
        cols = [j for j, ad in enumerate(table.ads) if by_id[ad].quadrant == quad]
        dims = {}
        for dim in ("A", "V", "E"):
            if dim in table.scores and cols:
                dims[dim] = _fmean(table.scores[dim][:, cols].ravel())
            else:
                dims[dim] = None
        length = _fmean([by_id[table.ads[j]].duration_s for j in cols]) if cols else None
        out[quad] = QuadrantStats(n_ads=len(cols), length_s=length, **dims)
    return out
