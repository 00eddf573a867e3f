"""Datasets, point sets, CSV ingestion and synthetic samplers."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FAMILIES = ("normal", "exponential", "beta")

# Marginal means, used as the GAPK peak location.
FAMILY_MEANS = {"normal": 0.0, "exponential": 1.0, "beta": 1.0 / 3.0}


class DataError(ValueError):
    """Raised for malformed input data."""


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """An N x p matrix of observations plus its standardization state.

    ``col_means``/``col_stds`` describe the affine map that produced
    ``values`` from the original units; they are zeros/ones when the data
    has not been standardized.
    """

    values: np.ndarray
    col_means: np.ndarray = None
    col_stds: np.ndarray = None
    standardized: bool = False
    header: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DataError(f"dataset must be a non-empty 2-d matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DataError("dataset contains non-finite entries")
        p = v.shape[1]
        means = np.zeros(p) if self.col_means is None else np.asarray(self.col_means, float)
        stds = np.ones(p) if self.col_stds is None else np.asarray(self.col_stds, float)
        if means.shape != (p,) or stds.shape != (p,):
            raise DataError("col_means/col_stds must have one entry per column")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "col_means", _frozen(means))
        object.__setattr__(self, "col_stds", _frozen(stds))

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class PointSet:
    """The n x p reduced representative points."""

    points: np.ndarray

    def __post_init__(self):
        x = np.array(self.points, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise DataError(f"point set must be a non-empty 2-d matrix, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DataError("point set contains non-finite entries")
        object.__setattr__(self, "points", _frozen(x))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def p(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class DistributionSpec:
    """An i.i.d. product distribution: N(0,1), Exp(1) or Beta(2,4) per coordinate."""

    family: str
    p: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if int(self.p) < 1:
            raise ValueError("p must be >= 1")

    @property
    def marginal_mean(self) -> float:
        return FAMILY_MEANS[self.family]


def load_csv(path, has_header: bool = False) -> Dataset:
    """Read a rectangular numeric CSV file into an unstandardized Dataset."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    header = None
    if has_header:
        if not rows:
            raise DataError(f"{path}: empty file")
        header = tuple(c.strip() for c in rows[0])
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(header) if header is not None else len(rows[0])
    values = np.empty((len(rows), width))
    first_line = 2 if has_header else 1
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {i + first_line} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                x = float(cell)
            except ValueError:
                raise DataError(f"{path}: cannot parse {cell!r} at row {i + first_line}, column {j + 1}") from None
            if not np.isfinite(x):
                raise DataError(f"{path}: non-finite value {cell!r} at row {i + first_line}, column {j + 1}")
            values[i, j] = x
    return Dataset(values, header=header)


def write_csv(path, values, header=None) -> None:
    """Write a matrix as CSV, full float precision."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(header)
        for row in values:
            w.writerow([repr(float(v)) for v in row])


def standardize(d: Dataset) -> Dataset:
    """Scale every column to zero mean and unit sample variance (divisor N-1).

    Constant columns map to 0 with a recorded std of 1. Standardizing an
    already standardized dataset composes the affine maps, so
    ``unstandardize`` still returns original units.
    """
    v = d.values
    means = v.mean(axis=0)
    if d.N >= 2:
        stds = v.std(axis=0, ddof=1)
    else:
        stds = np.zeros(d.p)
    # relative threshold so round-off in a constant column is not amplified
    const = stds <= 1e-12 * np.maximum(1.0, np.abs(means))
    stds = np.where(const, 1.0, stds)
    z = (v - means) / stds
    z[:, const] = 0.0
    return Dataset(
        z,
        col_means=d.col_means + d.col_stds * means,
        col_stds=d.col_stds * stds,
        standardized=True,
        header=d.header,
    )


def unstandardize(ps: PointSet, d: Dataset) -> PointSet:
    """Map points from d's standardized coordinates back to original units."""
    if ps.p != d.p:
        raise DataError(f"dimension mismatch: points have p={ps.p}, dataset has p={d.p}")
    return PointSet(ps.points * d.col_stds + d.col_means)


def sample(spec: DistributionSpec, count: int, seed=None) -> Dataset:
    """Draw ``count`` i.i.d. rows from the product distribution ``spec``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    shape = (int(count), int(spec.p))
    if spec.family == "normal":
        v = rng.standard_normal(shape)
    elif spec.family == "exponential":
        v = rng.standard_exponential(shape)
    else:
        v = rng.beta(2.0, 4.0, size=shape)
    return Dataset(v)


def nearest_rows(points: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Index of the Euclidean-nearest row of ``values`` for each point (lowest index on ties)."""
    points = np.atleast_2d(points)
    idx = np.empty(points.shape[0], dtype=np.intp)
    # exact differences rather than the expanded quadratic, which breaks ties by round-off
    step = max(1, 4_000_000 // (values.shape[0] * values.shape[1]))
    for s in range(0, points.shape[0], step):
        blk = points[s:s + step]
        d2 = ((blk[:, None, :] - values[None, :, :]) ** 2).sum(axis=2)
        idx[s:s + step] = np.argmin(d2, axis=1)
    return idx


def round_to_data(ps: PointSet, d: Dataset) -> PointSet:
    """Replace each point by its nearest dataset row (coordinates of ``d``)."""
    if ps.p != d.p:
        raise DataError(f"dimension mismatch: points have p={ps.p}, dataset has p={d.p}")
    return PointSet(d.values[nearest_rows(ps.points, d.values)])
