"""Alternating-regression estimation of sparse canonical weight pairs.

One component is fitted by iterating two regression half-steps, each a
cross-product followed by top-k soft-thresholding and latent-variable
rescaling, until the in-sample correlation stabilizes. Multiple sparsity
levels can share one sweep (grid fitting), and a sequence of components is
obtained by projection deflation between fits.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import RawMatrix, SparsityPair, WeightVector, soft_threshold_topk
from .metrics import (
    CCAModel,
    DeflationRecord,
    cpev,
    deflate,
    deflation_checksum,
    latent_correlation_matrix,
    matrix_values,
    pearson,
    _pairwise_abs_factor,
)
from .seeding import derive_rng

__all__ = [
    "SolverConfig",
    "CanonicalComponent",
    "init_alpha",
    "fit_component",
    "fit_component_grid",
    "fit",
]

INIT_SCHEMES = ("uniform", "normal", "eigen")


@dataclass(frozen=True)
class SolverConfig:
    """Iteration controls for a single-component fit.

    ``tolerance`` bounds the absolute change of the in-sample correlation
    between sweeps; ``restarts`` reruns the fit from seeds ``seed``,
    ``seed+1``, ... and keeps the best in-sample correlation.
    """

    tolerance: float = 1e-6
    max_iterations: int = 500
    init_scheme: str = "uniform"
    seed: int = 0
    restarts: int = 1

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.init_scheme not in INIT_SCHEMES:
            raise ValueError(f"init_scheme must be one of {INIT_SCHEMES}, got {self.init_scheme!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")


@dataclass(frozen=True, eq=False)
class CanonicalComponent:
    """One estimated weight pair with its latents and fit diagnostics.

    ``gamma``/``zeta`` are the unit-norm latent variables of the (possibly
    deflated) matrices the component was fitted on; multiplying by
    ``gamma_scale``/``zeta_scale`` recovers the un-normalized projections of
    the unit-norm weight copies, the form used for explained-variance
    accounting (keeping the cumulative ratio inside [0, 1]). ``rho_in`` is
    non-negative by convention (the beta/zeta pair is negated if needed).
    """

    alpha: WeightVector
    beta: WeightVector
    gamma: np.ndarray
    zeta: np.ndarray
    gamma_scale: float
    zeta_scale: float
    rho_in: float
    iterations: int
    converged: bool
    sparsity: SparsityPair
    degenerate: bool = False
    rho_history: tuple[float, ...] = ()
    rho_out: float | None = None

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64).reshape(-1).copy()
        z = np.asarray(self.zeta, dtype=np.float64).reshape(-1).copy()
        g.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "zeta", z)

    @property
    def gamma_raw(self) -> np.ndarray:
        return self.gamma * self.gamma_scale

    @property
    def zeta_raw(self) -> np.ndarray:
        return self.zeta * self.zeta_scale


def _power_iteration_right_singular(values: np.ndarray, rng: np.random.Generator,
                                    tol: float = 1e-8, max_iter: int = 1000) -> np.ndarray:
    """Dominant right singular vector via power iteration on X'X."""
    p = values.shape[1]
    v = rng.standard_normal(p)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        v = np.ones(p)
        nrm = np.linalg.norm(v)
    v /= nrm
    for _ in range(max_iter):
        w = values.T @ (values @ v)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            raise ValueError("matrix maps the start vector to zero; cannot run power iteration")
        w /= nrm
        # sign-agnostic change: the iterate may alternate sign
        if min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol:
            v = w
            break
        v = w
    return v


def init_alpha(p: int, scheme: str, seed: int, x1=None) -> np.ndarray:
    """Draw the starting weight vector for the alternating scheme.

    ``uniform`` and ``normal`` draw i.i.d. entries from U[-1,1] or N(0,1);
    ``eigen`` runs power iteration for the dominant right singular vector of
    ``x1``. All results have unit Euclidean norm and are deterministic in
    (scheme, seed).
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if scheme not in INIT_SCHEMES:
        raise ValueError(f"unknown init scheme {scheme!r}")
    rng = derive_rng(seed)
    if scheme == "uniform":
        v = rng.uniform(-1.0, 1.0, size=p)
    elif scheme == "normal":
        v = rng.standard_normal(p)
    else:
        if x1 is None:
            raise ValueError("eigen initialization needs the x1 matrix")
        values = matrix_values(x1)
        if values.shape[1] != p:
            raise ValueError(f"x1 has {values.shape[1]} columns, expected {p}")
        v = _power_iteration_right_singular(values, rng)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValueError("degenerate zero start vector")
    return v / nrm


def _project(x: np.ndarray, wv: WeightVector) -> np.ndarray:
    """x @ w restricted to the support when that is markedly cheaper."""
    if wv.nnz * 4 <= x.shape[1]:
        sup = wv.support
        return x[:, sup] @ wv.weights[sup]
    return x @ wv.weights


class _ColumnRun:
    """Iteration state of one sparsity pair.

    Both the single fit and the grid sweep advance instances of this class,
    so a grid column's arithmetic is bit-for-bit the run it would have had
    alone. A column freezes the moment its own correlation change drops
    below tolerance.
    """

    def __init__(self, x1v, x2v, sparsity: SparsityPair, alpha0, tolerance):
        self.x1v = x1v
        self.x2v = x2v
        self.sparsity = sparsity
        self.tolerance = tolerance
        self.rho_prev = 0.0
        self.rho = 0.0
        self.history: list[float] = []
        self.iterations = 0
        self.converged = False
        self.degenerate = False
        self.finished = False
        self.alpha = None
        self.beta = None
        self.zeta = None
        self.gamma_scale = 0.0
        self.zeta_scale = 0.0
        gamma_raw = x1v @ alpha0
        nrm = np.linalg.norm(gamma_raw)
        if nrm == 0.0:
            self._mark_degenerate()
        else:
            self.gamma = gamma_raw / nrm

    def _mark_degenerate(self):
        self.degenerate = True
        self.finished = True
        self.rho = 0.0
        self.alpha = WeightVector.from_weights(np.zeros(self.x1v.shape[1]))
        self.beta = WeightVector.from_weights(np.zeros(self.x2v.shape[1]))
        self.gamma = np.zeros(self.x1v.shape[0])
        self.zeta = np.zeros(self.x1v.shape[0])
        self.gamma_scale = 0.0
        self.zeta_scale = 0.0

    def advance(self):
        """One full sweep: x2-side regression, x1-side regression, correlation."""
        self.iterations += 1
        beta = soft_threshold_topk(self.x2v.T @ self.gamma, self.sparsity.k_beta)
        if beta.is_degenerate:
            self._mark_degenerate()
            return
        zeta_raw = _project(self.x2v, beta)
        zeta_scale = float(np.linalg.norm(zeta_raw))
        if zeta_scale == 0.0:
            self._mark_degenerate()
            return
        zeta = zeta_raw / zeta_scale
        alpha = soft_threshold_topk(self.x1v.T @ zeta, self.sparsity.k_alpha)
        if alpha.is_degenerate:
            self._mark_degenerate()
            return
        gamma_raw = _project(self.x1v, alpha)
        gamma_scale = float(np.linalg.norm(gamma_raw))
        if gamma_scale == 0.0:
            self._mark_degenerate()
            return
        gamma = gamma_raw / gamma_scale

        self.alpha, self.beta = alpha, beta
        self.gamma, self.zeta = gamma, zeta
        # latent norms for unit-norm weight copies (explained-variance form)
        self.gamma_scale = gamma_scale / float(np.linalg.norm(alpha.weights))
        self.zeta_scale = zeta_scale / float(np.linalg.norm(beta.weights))
        self.rho = pearson(gamma, zeta)
        self.history.append(self.rho)
        if abs(self.rho - self.rho_prev) < self.tolerance:
            self.converged = True
            self.finished = True
        else:
            self.rho_prev = self.rho

    def component(self) -> CanonicalComponent:
        if self.degenerate:
            return CanonicalComponent(
                alpha=self.alpha, beta=self.beta, gamma=self.gamma, zeta=self.zeta,
                gamma_scale=0.0, zeta_scale=0.0, rho_in=0.0,
                iterations=self.iterations, converged=False,
                sparsity=self.sparsity, degenerate=True,
                rho_history=tuple(self.history),
            )
        rho = self.rho
        beta, zeta = self.beta, self.zeta
        if rho < 0.0:
            # canonical pairs are sign-indeterminate; report rho_in >= 0
            beta = beta.negate()
            zeta = -zeta
            rho = -rho
        return CanonicalComponent(
            alpha=self.alpha, beta=beta, gamma=self.gamma, zeta=zeta,
            gamma_scale=self.gamma_scale, zeta_scale=self.zeta_scale,
            rho_in=rho, iterations=self.iterations, converged=self.converged,
            sparsity=self.sparsity, rho_history=tuple(self.history),
        )


def _solver_values(x) -> np.ndarray:
    if isinstance(x, RawMatrix):
        raise TypeError("got a RawMatrix; run standardize() on it before fitting")
    return matrix_values(x)


def _check_pair_dims(x1v: np.ndarray, x2v: np.ndarray) -> None:
    if x1v.shape[0] != x2v.shape[0]:
        raise ValueError(f"row counts differ: x1 has {x1v.shape[0]}, x2 has {x2v.shape[0]}")


def _sweep(x1v, x2v, pairs, alpha0, config: SolverConfig) -> list[CanonicalComponent]:
    """Advance all sparsity pairs in lockstep until each one stops."""
    runs = [_ColumnRun(x1v, x2v, pair, alpha0, config.tolerance) for pair in pairs]
    for _ in range(config.max_iterations):
        active = [r for r in runs if not r.finished]
        if not active:
            break
        for run in active:
            run.advance()
    return [r.component() for r in runs]


def _fit_pairs(x1v, x2v, pairs, config: SolverConfig) -> list[CanonicalComponent]:
    p = x1v.shape[1]
    best: list[CanonicalComponent] = []
    for r in range(config.restarts):
        alpha0 = init_alpha(p, config.init_scheme, config.seed + r, x1v)
        result = _sweep(x1v, x2v, pairs, alpha0, config)
        if r == 0:
            best = result
        else:
            best = [new if new.rho_in > old.rho_in else old for old, new in zip(best, result)]
    return best


def fit_component(x1, x2, sparsity: SparsityPair, config: SolverConfig = SolverConfig()) -> CanonicalComponent:
    """Estimate one sparse canonical weight pair.

    Parameters
    ----------
    x1, x2 : StandardizedMatrix or array
        Column-centered data blocks with a shared row count. Arrays are
        accepted so deflated matrices can be refitted directly.
    sparsity : SparsityPair
        Requested nonzero counts for the two weight vectors.
    config : SolverConfig
        Tolerance, iteration cap, initialization scheme/seed, restarts.

    Returns
    -------
    CanonicalComponent
        Flagged ``degenerate`` (with ``rho_in`` 0) if a score vector
        collapsed to zero; that is a data condition, not an error.
    """
    x1v = _solver_values(x1)
    x2v = _solver_values(x2)
    _check_pair_dims(x1v, x2v)
    sparsity.validate_for(x1v.shape[1], x2v.shape[1])
    return _fit_pairs(x1v, x2v, [sparsity], config)[0]


def fit_component_grid(x1, x2, grid: Sequence[SparsityPair],
                       config: SolverConfig = SolverConfig()) -> list[CanonicalComponent]:
    """Fit one component per sparsity pair, sharing a single start vector.

    All grid columns start from the same initial weights (drawn once per
    restart from the config) and advance through the sweep together; each
    column stops on its own tolerance. Results are bit-identical to calling
    :func:`fit_component` separately per pair with the same configuration.
    """
    if len(grid) == 0:
        raise ValueError("grid must contain at least one sparsity pair")
    x1v = _solver_values(x1)
    x2v = _solver_values(x2)
    _check_pair_dims(x1v, x2v)
    for pair in grid:
        pair.validate_for(x1v.shape[1], x2v.shape[1])
    return _fit_pairs(x1v, x2v, list(grid), config)


def _broadcast_sparsity(sparsity, n_components: int) -> list[SparsityPair]:
    if isinstance(sparsity, SparsityPair):
        return [sparsity] * n_components
    pairs = list(sparsity)
    if len(pairs) == 1:
        return pairs * n_components
    if len(pairs) != n_components:
        raise ValueError(
            f"sparsity list has {len(pairs)} entries for {n_components} components "
            "(give one pair per component, or a single pair to broadcast)"
        )
    return pairs


def fit(x1, x2, n_components: int, sparsity,
        config: SolverConfig = SolverConfig()) -> CCAModel:
    """Fit an ordered sequence of components with projection deflation.

    After each component, x1 is residualized on its gamma latent and x2 on
    its zeta latent, and the next component is fitted on the residual
    matrices. Components stay in estimation order. A degenerate component
    truncates the model (with a warning); earlier components are kept.

    ``sparsity`` may be a single :class:`SparsityPair` (broadcast) or a list
    with one pair per component.
    """
    x1v = _solver_values(x1)
    x2v = _solver_values(x2)
    _check_pair_dims(x1v, x2v)
    p, q = x1v.shape[1], x2v.shape[1]
    if not (1 <= n_components <= min(p, q)):
        raise ValueError(f"n_components must be in [1, {min(p, q)}], got {n_components}")
    pairs = _broadcast_sparsity(sparsity, n_components)

    components: list[CanonicalComponent] = []
    trail: list[DeflationRecord] = []
    truncated = False
    cur1, cur2 = x1v, x2v
    for k, pair in enumerate(pairs):
        comp = _fit_pairs(cur1, cur2, [pair], config)[0]
        if comp.degenerate:
            truncated = True
            warnings.warn(
                f"component {k + 1} degenerated (zero score vector); "
                f"model truncated to {len(components)} component(s)",
                RuntimeWarning,
                stacklevel=2,
            )
            break
        components.append(comp)
        cur1 = deflate(cur1, comp.gamma)
        cur2 = deflate(cur2, comp.zeta)
        fro1, sha1 = deflation_checksum(cur1)
        fro2, sha2 = deflation_checksum(cur2)
        trail.append(DeflationRecord(k + 1, fro1, fro2, sha1, sha2))

    k_fit = len(components)
    if k_fit == 0:
        corr_g = np.zeros((0, 0))
        corr_z = np.zeros((0, 0))
        cpev1 = cpev2 = adj1 = adj2 = ()
    else:
        gamma_raws = [c.gamma_raw for c in components]
        zeta_raws = [c.zeta_raw for c in components]
        corr_g = latent_correlation_matrix([c.gamma for c in components])
        corr_z = latent_correlation_matrix([c.zeta for c in components])
        cpev1 = tuple(cpev(gamma_raws[: k + 1], x1v) for k in range(k_fit))
        cpev2 = tuple(cpev(zeta_raws[: k + 1], x2v) for k in range(k_fit))
        adj1 = tuple(cpev1[k] * _pairwise_abs_factor(corr_g, k) for k in range(k_fit))
        adj2 = tuple(cpev2[k] * _pairwise_abs_factor(corr_z, k) for k in range(k_fit))
    corr_g.setflags(write=False)
    corr_z.setflags(write=False)

    return CCAModel(
        components=tuple(components),
        cpev_x1=cpev1,
        cpev_x2=cpev2,
        adj_cpev_x1=adj1,
        adj_cpev_x2=adj2,
        latent_gamma_correlations=corr_g,
        latent_zeta_correlations=corr_z,
        deflation_trail=tuple(trail),
        requested_components=n_components,
        truncated=truncated,
    )
