"""Data containers, column standardization, and the top-k soft-threshold operator.

Everything downstream (the alternating solver, deflation diagnostics,
permutation testing) is built on the three primitives defined here:
validated matrix containers, column standardization with recorded
means/scales, and sparsification of a score vector to a requested
number of nonzero entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RawMatrix",
    "StandardizedMatrix",
    "SparsityPair",
    "WeightVector",
    "standardize",
    "soft_threshold_topk",
]

# Columns whose sample standard deviation falls below this (relative to the
# column mean magnitude) are treated as zero-variance.
_ZERO_VARIANCE_TOL = 1e-12


def _as_float_matrix(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got array of shape {arr.shape}")
    return arr


def _check_finite(values: np.ndarray) -> None:
    if np.isfinite(values).all():
        return
    rows, cols = np.nonzero(~np.isfinite(values))
    r, c = int(rows[0]), int(cols[0])
    raise ValueError(f"non-finite entry {values[r, c]!r} at row {r}, column {c}")


def _frozen_copy(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, copy=True, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class RawMatrix:
    """Dense sample-by-variable data block with optional labels.

    Rows are samples, columns are variables. Entries must be finite and
    there must be at least two rows (one is not enough to estimate a
    column scale).
    """

    values: np.ndarray
    column_names: tuple[str, ...] | None = None
    row_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        values = _as_float_matrix(self.values)
        n, m = values.shape
        if n < 2:
            raise ValueError(f"need at least 2 rows, got {n}")
        if m < 1:
            raise ValueError("need at least 1 column")
        _check_finite(values)
        object.__setattr__(self, "values", _frozen_copy(values))
        if self.column_names is not None:
            names = tuple(str(c) for c in self.column_names)
            if len(names) != m:
                raise ValueError(f"{len(names)} column names for {m} columns")
            object.__setattr__(self, "column_names", names)
        if self.row_ids is not None:
            ids = tuple(str(r) for r in self.row_ids)
            if len(ids) != n:
                raise ValueError(f"{len(ids)} row ids for {n} rows")
            object.__setattr__(self, "row_ids", ids)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class StandardizedMatrix:
    """Column-standardized matrix with the transform retained.

    ``values`` has columns with sample mean 0 and sample standard
    deviation 1 (divisor n-1); ``col_means`` and ``col_scales`` record the
    original-unit transform so new rows can be mapped into the same space.
    ``dropped_columns`` lists original column indices removed under the
    ``drop`` zero-variance policy.
    """

    values: np.ndarray
    col_means: np.ndarray
    col_scales: np.ndarray
    column_names: tuple[str, ...] | None = None
    row_ids: tuple[str, ...] | None = None
    dropped_columns: tuple[int, ...] = field(default=())

    def __post_init__(self):
        values = _as_float_matrix(self.values)
        n, m = values.shape
        means = np.asarray(self.col_means, dtype=np.float64).reshape(-1)
        scales = np.asarray(self.col_scales, dtype=np.float64).reshape(-1)
        if means.shape[0] != m or scales.shape[0] != m:
            raise ValueError("col_means/col_scales length must match column count")
        if not (scales > 0).all():
            bad = int(np.nonzero(~(scales > 0))[0][0])
            raise ValueError(f"col_scales must be positive; column {bad} has scale {scales[bad]!r}")
        if np.abs(values.mean(axis=0)).max() > 1e-10:
            raise ValueError("columns are not centered to mean 0 within 1e-10")
        if np.abs(values.std(axis=0, ddof=1) - 1.0).max() > 1e-8:
            raise ValueError("columns are not scaled to standard deviation 1 within 1e-8")
        object.__setattr__(self, "values", _frozen_copy(values))
        object.__setattr__(self, "col_means", _frozen_copy(means))
        object.__setattr__(self, "col_scales", _frozen_copy(scales))
        if self.column_names is not None and len(self.column_names) != m:
            raise ValueError(f"{len(self.column_names)} column names for {m} columns")
        if self.row_ids is not None and len(self.row_ids) != n:
            raise ValueError(f"{len(self.row_ids)} row ids for {n} rows")
        object.__setattr__(self, "dropped_columns", tuple(int(j) for j in self.dropped_columns))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def transform(self, new_values) -> np.ndarray:
        """Map rows in original units into this matrix's standardized space."""
        arr = _as_float_matrix(new_values)
        if arr.shape[1] != self.values.shape[1]:
            raise ValueError(f"expected {self.values.shape[1]} columns, got {arr.shape[1]}")
        return (arr - self.col_means) / self.col_scales


@dataclass(frozen=True)
class SparsityPair:
    """Requested nonzero counts for the two weight vectors of one component."""

    k_alpha: int
    k_beta: int

    def __post_init__(self):
        for name, k in (("k_alpha", self.k_alpha), ("k_beta", self.k_beta)):
            if int(k) != k or int(k) < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {k!r}")
        object.__setattr__(self, "k_alpha", int(self.k_alpha))
        object.__setattr__(self, "k_beta", int(self.k_beta))

    def validate_for(self, p: int, q: int) -> None:
        if self.k_alpha > p:
            raise ValueError(f"k_alpha={self.k_alpha} exceeds variable count p={p}")
        if self.k_beta > q:
            raise ValueError(f"k_beta={self.k_beta} exceeds variable count q={q}")


@dataclass(frozen=True)
class WeightVector:
    """A (possibly sparse) weight vector together with its nonzero count.

    ``nnz == 0`` marks the degenerate all-zero vector produced when a score
    vector carried no signal; it is never silently treated as an error.
    """

    weights: np.ndarray
    nnz: int

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        actual = int(np.count_nonzero(w))
        if actual != self.nnz:
            raise ValueError(f"declared nnz={self.nnz} but vector has {actual} nonzeros")
        object.__setattr__(self, "weights", _frozen_copy(w))
        object.__setattr__(self, "nnz", actual)

    @classmethod
    def from_weights(cls, weights) -> "WeightVector":
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        return cls(w, int(np.count_nonzero(w)))

    @property
    def is_degenerate(self) -> bool:
        return self.nnz == 0

    @property
    def support(self) -> np.ndarray:
        """Indices of nonzero entries, ascending."""
        return np.flatnonzero(self.weights)

    def unit(self) -> np.ndarray:
        """Unit-Euclidean-norm copy for display; zeros stay zeros."""
        nrm = float(np.linalg.norm(self.weights))
        if nrm == 0.0:
            return self.weights.copy()
        return self.weights / nrm

    def negate(self) -> "WeightVector":
        return WeightVector(-self.weights, self.nnz)


def standardize(raw, zero_variance_policy: str = "error") -> StandardizedMatrix:
    """Center each column to mean 0 and scale to standard deviation 1.

    Parameters
    ----------
    raw : RawMatrix or array_like
        Sample-by-variable matrix. Arrays are validated as if wrapped in
        :class:`RawMatrix`.
    zero_variance_policy : {"error", "drop"}
        ``error`` raises on a zero-variance column (naming it); ``drop``
        removes such columns and records their original indices in
        ``dropped_columns``.

    Returns
    -------
    StandardizedMatrix
        Uses the n-1 divisor for the standard deviation. Applying
        ``standardize`` to an already standardized matrix reproduces its
        values (idempotence).
    """
    if zero_variance_policy not in ("error", "drop"):
        raise ValueError(f"unknown zero_variance_policy {zero_variance_policy!r}")
    if not isinstance(raw, RawMatrix):
        raw = RawMatrix(raw)
    values = raw.values
    means = values.mean(axis=0)
    scales = values.std(axis=0, ddof=1)

    zero_var = scales <= _ZERO_VARIANCE_TOL * np.maximum(1.0, np.abs(means))
    dropped: tuple[int, ...] = ()
    column_names = raw.column_names
    if zero_var.any():
        idx = np.nonzero(zero_var)[0]
        if zero_variance_policy == "error":
            j = int(idx[0])
            label = column_names[j] if column_names is not None else str(j)
            raise ValueError(f"column {label!r} (index {j}) has zero variance")
        keep = ~zero_var
        if not keep.any():
            raise ValueError("all columns have zero variance; nothing to standardize")
        dropped = tuple(int(j) for j in idx)
        values = values[:, keep]
        means = means[keep]
        scales = scales[keep]
        if column_names is not None:
            column_names = tuple(c for c, k in zip(column_names, keep) if k)

    return StandardizedMatrix(
        (values - means) / scales,
        means,
        scales,
        column_names=column_names,
        row_ids=raw.row_ids,
        dropped_columns=dropped,
    )


def soft_threshold_topk(v, k: int) -> WeightVector:
    """Shrink a score vector so that at most ``k`` entries stay nonzero.

    The shrinkage level lambda is the (k+1)-th largest absolute value of
    ``v`` (0 when ``k`` equals the length); every entry moves toward zero by
    lambda and entries at or below it vanish:

        w_j = sign(v_j) * (|v_j| - lambda)   if |v_j| > lambda, else 0

    Exactly ``k`` entries survive when the k-th and (k+1)-th largest
    magnitudes differ. Ties at the boundary shrink to zero, so the nonzero
    count never exceeds ``k``. An all-zero input yields the degenerate
    all-zero output (``nnz == 0``) rather than an error.
    """
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    m = v.shape[0]
    if not (1 <= k <= m):
        raise ValueError(f"k must be in [1, {m}], got {k}")
    if not np.isfinite(v).all():
        raise ValueError("score vector has non-finite entries")
    mags = np.abs(v)
    if k == m:
        lam = 0.0
    else:
        # (k+1)-th largest magnitude == (m-k-1)-th smallest
        lam = float(np.partition(mags, m - k - 1)[m - k - 1])
    shrunk = mags - lam
    w = np.where(shrunk > 0.0, np.sign(v) * shrunk, 0.0)
    return WeightVector(w, int(np.count_nonzero(w)))
