"""Ingestion: CSV loading, imputation, normalization and period grouping.

Order of operations for a cohort run: load raw records, impute per
subject (forward fill, backward fill, then class mean/mode), fit a
min-max normalizer on the corpus, and normalize every vector with the
stored statistics.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, ImputeError, TrajectoryError
from .geometry import FeatureVector


@dataclass(eq=False)
class RawRecord:
    """One pre-imputation observation; None marks a missing value."""

    subject_id: str
    t_index: int
    values: List[Optional[float]]
    categorical: Dict[str, Optional[str]] = field(default_factory=dict)


@dataclass(eq=False)
class Trajectory:
    """Fully imputed, ordered point sequence for one subject."""

    subject_id: str
    points: List[Tuple[int, FeatureVector]]
    label: Optional[str] = None

    def __post_init__(self):
        ts = [t for t, _ in self.points]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise TrajectoryError(
                f"t_index not strictly increasing for subject {self.subject_id!r}")
        dims = {p.dim for _, p in self.points}
        if len(dims) > 1:
            raise DimensionError(
                f"inconsistent dimensions in trajectory {self.subject_id!r}: {sorted(dims)}")


def impute(records: Sequence[RawRecord],
           class_means: Optional[Sequence[float]] = None,
           class_modes: Optional[Mapping[str, str]] = None) -> List[RawRecord]:
    """Fill every missing value for one subject's sorted records.

    Forward fill first, backward fill leading gaps, and fall back to the
    class mean (numeric) or class mode (categorical) for columns missing
    across the whole stay.
    """
    if not records:
        return []
    n_cols = len(records[0].values)
    out = [RawRecord(subject_id=r.subject_id, t_index=r.t_index,
                     values=list(r.values), categorical=dict(r.categorical))
           for r in records]
    for col in range(n_cols):
        column = [r.values[col] for r in out]
        filled = _fill_column(column)
        if filled is None:
            if class_means is None or class_means[col] is None:
                raise ImputeError(
                    f"column {col} is entirely missing and no class mean is available")
            filled = [float(class_means[col])] * len(column)
        for r, v in zip(out, filled):
            r.values[col] = v
    for name in records[0].categorical:
        column = [r.categorical.get(name) for r in out]
        filled = _fill_column(column)
        if filled is None:
            if class_modes is None or name not in class_modes:
                raise ImputeError(
                    f"categorical {name!r} is entirely missing and no class mode is available")
            filled = [class_modes[name]] * len(column)
        for r, v in zip(out, filled):
            r.categorical[name] = v
    return out


def _fill_column(column):
    """Forward then backward fill; None if the column is entirely missing."""
    if all(v is None for v in column):
        return None
    filled = list(column)
    last = None
    for i, v in enumerate(filled):
        if v is None:
            filled[i] = last
        else:
            last = filled[i]
    nxt = None
    for i in range(len(filled) - 1, -1, -1):
        if filled[i] is None:
            filled[i] = nxt
        else:
            nxt = filled[i]
    return filled


@dataclass(eq=False)
class NormStats:
    """Per-feature min-max statistics, persisted alongside the corpus."""

    names: List[str]
    mins: np.ndarray
    maxs: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.names)

    def apply(self, values) -> FeatureVector:
        v = np.asarray(values, dtype=float)
        if v.shape != (self.dim,):
            raise DimensionError(
                f"vector dimension {v.shape[0]} does not match normalizer {self.dim}")
        span = self.maxs - self.mins
        out = np.where(span > 0, (v - self.mins) / np.where(span > 0, span, 1.0), 0.5)
        return FeatureVector(out)

    def invert(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        if v.shape != (self.dim,):
            raise DimensionError(
                f"vector dimension {v.shape[0]} does not match normalizer {self.dim}")
        span = self.maxs - self.mins
        return np.where(span > 0, v * span + self.mins, self.mins)

    def to_json(self) -> dict:
        return {"features": [{"name": n, "min": float(lo), "max": float(hi)}
                             for n, lo, hi in zip(self.names, self.mins, self.maxs)]}

    @classmethod
    def from_json(cls, doc: dict) -> "NormStats":
        feats = doc["features"]
        return cls(names=[f["name"] for f in feats],
                   mins=np.array([f["min"] for f in feats], dtype=float),
                   maxs=np.array([f["max"] for f in feats], dtype=float))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "NormStats":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def fit_normalizer(rows, names: Optional[Sequence[str]] = None) -> NormStats:
    """Min-max statistics per feature from corpus rows only."""
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise DimensionError("normalizer needs a non-empty 2-D row matrix")
    if names is None:
        names = [f"f{i}" for i in range(arr.shape[1])]
    if len(names) != arr.shape[1]:
        raise DimensionError("feature name count does not match row width")
    return NormStats(names=list(names), mins=arr.min(axis=0), maxs=arr.max(axis=0))


def group_by(records: Iterable[Tuple[str, str, Sequence[Optional[float]]]],
             period: str = "month") -> List[Tuple[str, str, List[Optional[float]]]]:
    """Missing-aware mean per (subject, period, feature).

    Records are (subject_id, timestamp, values); timestamps are ISO
    strings or datetime-likes. The default period key is the calendar
    month (YYYY-MM). Output is sorted by (subject, period).
    """
    if period != "month":
        raise ValueError(f"unsupported period {period!r}")
    groups: Dict[Tuple[str, str], List[Sequence[Optional[float]]]] = {}
    for subject, ts, values in records:
        key = (subject, _month_key(ts))
        groups.setdefault(key, []).append(values)
    out = []
    for (subject, pkey) in sorted(groups):
        rows = groups[(subject, pkey)]
        width = len(rows[0])
        means: List[Optional[float]] = []
        for col in range(width):
            present = [r[col] for r in rows if r[col] is not None]
            means.append(float(np.mean(present)) if present else None)
        out.append((subject, pkey, means))
    return out


def _month_key(ts) -> str:
    if hasattr(ts, "strftime"):
        return ts.strftime("%Y-%m")
    return str(ts)[:7]


def load_trajectory_csv(path):
    """Read a `subject_id,t,<feature...>[,label]` CSV with empty cells as
    missing. Returns (records by subject, labels by subject, feature names)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TrajectoryError(f"{path}: empty file")
        if header[:2] != ["subject_id", "t"]:
            raise TrajectoryError(
                f"{path}: header must start with subject_id,t")
        has_label = header[-1] == "label"
        feature_names = header[2:-1] if has_label else header[2:]
        if not feature_names:
            raise TrajectoryError(f"{path}: no feature columns")
        by_subject: Dict[str, List[RawRecord]] = {}
        labels: Dict[str, Optional[str]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            expected = 2 + len(feature_names) + (1 if has_label else 0)
            if len(row) != expected:
                raise TrajectoryError(
                    f"{path}:{lineno}: expected {expected} columns, got {len(row)}")
            subject = row[0]
            t = int(row[1])
            raw_vals = row[2:2 + len(feature_names)]
            values = [float(v) if v != "" else None for v in raw_vals]
            by_subject.setdefault(subject, []).append(
                RawRecord(subject_id=subject, t_index=t, values=values))
            if has_label and row[-1] != "":
                labels[subject] = row[-1]
    for records in by_subject.values():
        records.sort(key=lambda r: r.t_index)
        seen = set()
        for r in records:
            if r.t_index in seen:
                raise TrajectoryError(
                    f"{path}: duplicate t={r.t_index} for subject {r.subject_id!r}")
            seen.add(r.t_index)
    return by_subject, labels, feature_names


def build_trajectory(records: Sequence[RawRecord], *,
                     label: Optional[str] = None,
                     class_means: Optional[Mapping[str, Sequence[float]]] = None,
                     normalizer: Optional[NormStats] = None) -> Trajectory:
    """Impute one subject's sorted records and (optionally) normalize."""
    means = None
    if class_means is not None and label is not None and label in class_means:
        means = class_means[label]
    filled = impute(records, class_means=means)
    points = []
    for r in filled:
        vec = normalizer.apply(r.values) if normalizer else FeatureVector(r.values)
        points.append((r.t_index, vec))
    return Trajectory(subject_id=records[0].subject_id, points=points, label=label)


def one_hot_categories(records: Iterable[RawRecord]) -> Dict[str, List[str]]:
    """Sorted category list per categorical column, for one-hot encoding."""
    cats: Dict[str, set] = {}
    for r in records:
        for name, val in r.categorical.items():
            if val is not None:
                cats.setdefault(name, set()).add(val)
    return {name: sorted(vals) for name, vals in sorted(cats.items())}


def one_hot_encode(record: RawRecord,
                   categories: Mapping[str, Sequence[str]]) -> List[float]:
    """Numeric values followed by one-hot indicators, in category order."""
    out = [float(v) for v in record.values]
    for name in categories:
        val = record.categorical.get(name)
        for cat in categories[name]:
            out.append(1.0 if val == cat else 0.0)
    return out
