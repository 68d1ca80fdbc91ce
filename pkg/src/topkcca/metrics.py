"""Projection deflation and correlation/variance diagnostics.

Holds the pieces that sit around the alternating solver: the canonical
correlation of a weight pair, residualization of a data block on a fitted
latent variable, cumulative explained-variance measures (plain and
adjusted for repeated information), cross-component latent correlations,
and the repeated-holdout out-of-sample correlation protocol.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .core import StandardizedMatrix, SparsityPair, WeightVector, standardize
from .seeding import derive_rng

if TYPE_CHECKING:
    from .solver import SolverConfig

__all__ = [
    "CCAModel",
    "DeflationRecord",
    "SplitSpec",
    "OutOfSampleResult",
    "OutOfSampleProfile",
    "canonical_correlation",
    "deflate",
    "cpev",
    "adjusted_cpev",
    "cross_component_correlation",
    "out_of_sample_correlation",
    "out_of_sample_components",
]


def matrix_values(x) -> np.ndarray:
    """Extract the float matrix from a container or array-like."""
    if isinstance(x, StandardizedMatrix):
        return x.values
    if hasattr(x, "values") and isinstance(getattr(x, "values"), np.ndarray):
        return x.values
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def _weights_array(w) -> np.ndarray:
    if isinstance(w, WeightVector):
        return w.weights
    return np.asarray(w, dtype=np.float64).reshape(-1)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Plain Pearson correlation of two vectors."""
    a0 = a - a.mean()
    b0 = b - b.mean()
    na = float(np.linalg.norm(a0))
    nb = float(np.linalg.norm(b0))
    if na == 0.0 or nb == 0.0:
        raise ValueError("correlation undefined for a constant vector")
    return float(a0 @ b0) / (na * nb)


def canonical_correlation(alpha, beta, x1, x2) -> float:
    """Correlation of the two projections defined by a weight pair.

    Computes a'X1'X2b / (sqrt(a'X1'X1a) * sqrt(b'X2'X2b)), which equals the
    Pearson correlation of the latent variables when the data columns are
    centered. Raises if either projection is identically zero.
    """
    x1v = matrix_values(x1)
    x2v = matrix_values(x2)
    a = _weights_array(alpha)
    b = _weights_array(beta)
    ga = x1v @ a
    zb = x2v @ b
    na = float(np.linalg.norm(ga))
    nb = float(np.linalg.norm(zb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("degenerate weights: a projection has zero norm")
    return float(ga @ zb) / (na * nb)


def deflate(x, gamma) -> np.ndarray:
    """Residualize every column of ``x`` on the latent vector ``gamma``.

    Returns (I - g (g'g)^-1 g') X as a plain array. The output is
    intentionally not re-standardized: centering survives the projection
    (``gamma`` is a combination of centered columns) and re-scaling would
    distort explained-variance ratios taken against the original matrix.
    """
    xv = matrix_values(x)
    g = np.asarray(gamma, dtype=np.float64).reshape(-1)
    if g.shape[0] != xv.shape[0]:
        raise ValueError(f"gamma length {g.shape[0]} does not match row count {xv.shape[0]}")
    g2 = float(g @ g)
    if g2 == 0.0:
        raise ValueError("cannot deflate on a zero latent vector")
    return xv - np.outer(g, (g @ xv) / g2)


def cpev(latents: Sequence[np.ndarray], x_original) -> float:
    """Cumulative proportion of explained variance of a latent sequence.

    ``latents`` are the fitted projections in their un-normalized form (the
    raw X^(k) alpha_k vectors); the ratio is tr(G'G) / tr(X'X) against the
    original standardized matrix.
    """
    if len(latents) == 0:
        raise ValueError("cpev needs at least one latent vector")
    xv = matrix_values(x_original)
    denom = float(np.sum(xv * xv))
    num = 0.0
    for g in latents:
        gv = np.asarray(g, dtype=np.float64).reshape(-1)
        if gv.shape[0] != xv.shape[0]:
            raise ValueError("latent length does not match row count")
        num += float(gv @ gv)
    return num / denom


def _pairwise_abs_factor(corr: np.ndarray, k: int) -> float:
    """Product over earlier components of (1 - |cor(latent_i, latent_k)|)."""
    fac = 1.0
    for i in range(k):
        fac *= 1.0 - abs(float(corr[i, k]))
    return fac


@dataclass(frozen=True)
class DeflationRecord:
    """Audit checksum of the residual matrices after one deflation step."""

    component: int
    x1_frobenius: float
    x2_frobenius: float
    x1_sha256: str
    x2_sha256: str


def deflation_checksum(values: np.ndarray) -> tuple[float, str]:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    return float(np.linalg.norm(arr)), hashlib.sha256(arr.tobytes()).hexdigest()


@dataclass(frozen=True, eq=False)
class CCAModel:
    """Ordered sequence of fitted components plus variance diagnostics.

    ``cpev_*`` entries are cumulative through each component; ``adj_cpev_*``
    discount them by the product of (1 - |correlation to earlier latents|).
    ``truncated`` is set when fitting stopped early on a degenerate
    component; only the preceding components are kept.
    """

    components: tuple
    cpev_x1: tuple[float, ...]
    cpev_x2: tuple[float, ...]
    adj_cpev_x1: tuple[float, ...]
    adj_cpev_x2: tuple[float, ...]
    latent_gamma_correlations: np.ndarray
    latent_zeta_correlations: np.ndarray
    deflation_trail: tuple[DeflationRecord, ...]
    requested_components: int
    truncated: bool = False

    @property
    def n_components(self) -> int:
        return len(self.components)

    def with_rho_out(self, rho_out: Sequence[float]) -> "CCAModel":
        """Copy of the model with out-of-sample correlations attached."""
        if len(rho_out) != len(self.components):
            raise ValueError("need one rho_out per fitted component")
        comps = tuple(
            replace(c, rho_out=float(r)) for c, r in zip(self.components, rho_out)
        )
        return replace(self, components=comps)


def cross_component_correlation(model: CCAModel) -> tuple[np.ndarray, np.ndarray]:
    """K x K Pearson correlation matrices of the gamma and zeta latents."""
    if model.n_components < 1:
        raise ValueError("model has no components")
    gammas = [c.gamma for c in model.components]
    zetas = [c.zeta for c in model.components]
    return latent_correlation_matrix(gammas), latent_correlation_matrix(zetas)


def latent_correlation_matrix(latents: Sequence[np.ndarray]) -> np.ndarray:
    k = len(latents)
    out = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = pearson(latents[i], latents[j])
    return out


def adjusted_cpev(model: CCAModel, k: int, side: str = "x1") -> float:
    """Cumulative explained variance at component ``k`` discounted for
    repeated information; ``k=1`` returns the plain value."""
    if side not in ("x1", "x2"):
        raise ValueError(f"side must be 'x1' or 'x2', got {side!r}")
    if not (1 <= k <= model.n_components):
        raise ValueError(f"k must be in [1, {model.n_components}], got {k}")
    if side == "x1":
        base = model.cpev_x1[k - 1]
        corr = model.latent_gamma_correlations
    else:
        base = model.cpev_x2[k - 1]
        corr = model.latent_zeta_correlations
    return base * _pairwise_abs_factor(corr, k - 1)


@dataclass(frozen=True)
class SplitSpec:
    """Repeated random train/holdout protocol for out-of-sample correlation."""

    holdout_fraction: float = 0.2
    repeats: int = 10
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.holdout_fraction < 1.0):
            raise ValueError(f"holdout_fraction must be in (0,1), got {self.holdout_fraction}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")

    def sizes_for(self, n: int) -> tuple[int, int]:
        """(train size, holdout size) for n rows; both sides must stay usable."""
        n_hold = int(round(n * self.holdout_fraction))
        n_train = n - n_hold
        if n_hold < 3:
            raise ValueError(f"holdout of {n_hold} rows is too small (need >= 3)")
        if n_train < 3:
            raise ValueError(f"train split of {n_train} rows is too small (need >= 3)")
        return n_train, n_hold


@dataclass(frozen=True)
class OutOfSampleResult:
    mean: float
    per_repeat: tuple[float, ...]
    degenerate_repeats: tuple[int, ...] = ()


@dataclass(frozen=True)
class OutOfSampleProfile:
    """Per-component out-of-sample correlations from repeated holdouts."""

    mean: tuple[float, ...]
    per_repeat: np.ndarray  # repeats x K
    degenerate: tuple[tuple[int, int], ...] = ()  # (repeat, component)


def _split_standardized(x1v, x2v, train_idx, hold_idx):
    """Standardize the train rows; map holdout rows with the train statistics."""
    x1_train = standardize(x1v[train_idx])
    x2_train = standardize(x2v[train_idx])
    x1_hold = x1_train.transform(x1v[hold_idx])
    x2_hold = x2_train.transform(x2v[hold_idx])
    return x1_train, x2_train, x1_hold, x2_hold


def out_of_sample_correlation(
    x1,
    x2,
    sparsity: SparsityPair,
    config: "SolverConfig",
    split: SplitSpec = SplitSpec(),
) -> OutOfSampleResult:
    """Mean held-out canonical correlation of a single component.

    For each repeat the rows are shuffled by a seeded permutation, the
    component is fitted on the train part (re-standardized), and the
    canonical correlation of the holdout projections is recorded. Holdout
    rows are standardized with the train statistics. The sign is NOT forced
    positive: on noise the values straddle zero.
    """
    from .solver import fit_component  # deferred: solver builds on this module

    x1v = matrix_values(x1)
    x2v = matrix_values(x2)
    n = x1v.shape[0]
    if x2v.shape[0] != n:
        raise ValueError(f"row counts differ: {n} vs {x2v.shape[0]}")
    _, n_hold = split.sizes_for(n)

    values = []
    degenerate = []
    for i in range(split.repeats):
        perm = derive_rng(split.seed, i).permutation(n)
        hold_idx, train_idx = perm[:n_hold], perm[n_hold:]
        x1_train, x2_train, x1_hold, x2_hold = _split_standardized(x1v, x2v, train_idx, hold_idx)
        comp = fit_component(x1_train, x2_train, sparsity, config)
        if comp.degenerate:
            degenerate.append(i)
            values.append(0.0)
        else:
            values.append(canonical_correlation(comp.alpha, comp.beta, x1_hold, x2_hold))
    return OutOfSampleResult(float(np.mean(values)), tuple(values), tuple(degenerate))


def out_of_sample_components(
    x1,
    x2,
    n_components: int,
    sparsity,
    config: "SolverConfig",
    split: SplitSpec = SplitSpec(),
) -> OutOfSampleProfile:
    """Out-of-sample correlations for a full multi-component fit.

    Each repeat refits all components (with deflation) on the train rows;
    holdout projections use the un-deflated holdout rows since deflation
    lives in the train sample space.
    """
    from .solver import fit  # deferred: solver builds on this module

    x1v = matrix_values(x1)
    x2v = matrix_values(x2)
    n = x1v.shape[0]
    if x2v.shape[0] != n:
        raise ValueError(f"row counts differ: {n} vs {x2v.shape[0]}")
    _, n_hold = split.sizes_for(n)

    table = np.zeros((split.repeats, n_components))
    degenerate = []
    for i in range(split.repeats):
        perm = derive_rng(split.seed, i).permutation(n)
        hold_idx, train_idx = perm[:n_hold], perm[n_hold:]
        x1_train, x2_train, x1_hold, x2_hold = _split_standardized(x1v, x2v, train_idx, hold_idx)
        model = fit(x1_train, x2_train, n_components, sparsity, config)
        for k, comp in enumerate(model.components):
            table[i, k] = canonical_correlation(comp.alpha, comp.beta, x1_hold, x2_hold)
        for k in range(model.n_components, n_components):
            degenerate.append((i, k))
    means = tuple(float(v) for v in table.mean(axis=0))
    table.setflags(write=False)
    return OutOfSampleProfile(means, table, tuple(degenerate))
