"""Process-data ingestion, z-score scaling, and second-order expansion.

Data is held variables-by-samples: a measurement matrix with n process
variables and m samples is an n x m array.  The second-order expansion maps
each sample x to [1, x_1..x_n, x_1*x_1, x_1*x_2, ..., x_n*x_n], so the
expanded dimension is N = 1 + n + n**2 (the full product block is kept,
including both x_j*x_k and x_k*x_j).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Std below this is treated as a constant column and replaced by 1.
_STD_FLOOR = 1e-12


@dataclass
class DataMatrix:
    """An n x m block of process measurements (variables by samples)."""

    values: np.ndarray
    variable_names: list[str] | None = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got ndim={self.values.ndim}")
        n, m = self.values.shape
        if n < 1 or m < 1:
            raise ValueError(f"matrix must be at least 1x1, got {n}x{m}")
        if not np.all(np.isfinite(self.values)):
            bad = np.argwhere(~np.isfinite(self.values))[0]
            raise ValueError(
                f"non-finite entry at variable {bad[0]}, sample {bad[1]}"
            )
        if self.variable_names is not None and len(self.variable_names) != n:
            raise ValueError(
                f"got {len(self.variable_names)} variable names for {n} variables"
            )

    @property
    def n_variables(self) -> int:
        return self.values.shape[0]

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]


@dataclass
class Scaler:
    """Per-variable location/scale learned from training data."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=float).ravel()
        self.std = np.asarray(self.std, dtype=float).ravel()
        if self.mean.shape != self.std.shape:
            raise ValueError("mean and std must have the same length")
        if not np.all(self.std > 0):
            raise ValueError("scaler std entries must be strictly positive")

    @property
    def n_variables(self) -> int:
        return self.mean.shape[0]


@dataclass
class ExpandedMatrix:
    """Second-order expansion of a DataMatrix: (1 + n + n^2) x m."""

    values: np.ndarray
    source_n: int

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        n = self.source_n
        if self.values.shape[0] != 1 + n + n * n:
            raise ValueError(
                f"expanded row count {self.values.shape[0]} does not match "
                f"1+n+n^2 = {1 + n + n * n} for n={n}"
            )

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]


def fit_scaler(X: DataMatrix) -> Scaler:
    """Learn per-variable mean and sample std (m-1 divisor) from training data.

    Constant columns (std below 1e-12) get std 1 so scaling never divides by
    a vanishing spread.
    """
    if X.n_samples < 2:
        raise ValueError(f"need at least 2 samples to fit a scaler, got {X.n_samples}")
    mean = X.values.mean(axis=1)
    std = X.values.std(axis=1, ddof=1)
    std = np.where(std < _STD_FLOOR, 1.0, std)
    return Scaler(mean=mean, std=std)


def apply_scaler(scaler: Scaler, X: DataMatrix) -> DataMatrix:
    """Z-score X with the scaler's training statistics."""
    if X.n_variables != scaler.n_variables:
        raise ValueError(
            f"scaler was fit on {scaler.n_variables} variables, "
            f"data has {X.n_variables}"
        )
    scaled = (X.values - scaler.mean[:, None]) / scaler.std[:, None]
    return DataMatrix(values=scaled, variable_names=X.variable_names)


def expand_second_order(X: DataMatrix) -> ExpandedMatrix:
    """Expand each sample to [1, x, all ordered products x_j*x_k].

    Products are laid out row-major (j outer, k inner), so the entry at row
    1 + n + j*n + k is exactly the IEEE product of rows 1+j and 1+k.
    """
    vals = X.values
    n, m = vals.shape
    products = (vals[:, None, :] * vals[None, :, :]).reshape(n * n, m)
    expanded = np.concatenate([np.ones((1, m)), vals, products], axis=0)
    return ExpandedMatrix(values=expanded, source_n=n)


def expanded_dim(n: int) -> int:
    """Dimension of the second-order expansion of an n-variable sample."""
    return 1 + n + n * n


def load_csv(
    path: str | Path,
    samples: str = "cols",
    header: bool = False,
) -> DataMatrix:
    """Read a comma-separated matrix of process data.

    ``samples`` declares the layout: "cols" means each CSV column holds one
    sample (variables are rows), "rows" means each CSV row is one sample.
    ``header`` skips one leading line; with samples-as-rows the header cells
    become variable names.
    """
    if samples not in ("rows", "cols"):
        raise ValueError(f"samples must be 'rows' or 'cols', got {samples!r}")
    path = Path(path)
    rows: list[list[float]] = []
    names: list[str] | None = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for line_no, record in enumerate(reader):
            if not record or all(cell.strip() == "" for cell in record):
                continue
            if header and not rows and names is None:
                names = [cell.strip() for cell in record]
                continue
            parsed = []
            for col_no, cell in enumerate(record):
                try:
                    value = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric cell at row {line_no}, "
                        f"column {col_no}: {cell!r}"
                    ) from None
                if not np.isfinite(value):
                    raise ValueError(
                        f"{path}: non-finite value at row {line_no}, "
                        f"column {col_no}: {cell!r}"
                    )
                parsed.append(value)
            if rows and len(parsed) != len(rows[0]):
                raise ValueError(
                    f"{path}: ragged row {line_no}: expected {len(rows[0])} "
                    f"cells, got {len(parsed)}"
                )
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    arr = np.array(rows, dtype=float)
    if samples == "rows":
        return DataMatrix(values=arr.T, variable_names=names)
    return DataMatrix(values=arr, variable_names=None)
