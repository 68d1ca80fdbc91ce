"""Permutation-based significance testing of canonical correlations.

The rows of one dataset are permuted to break the cross-dataset pairing
and the model is refitted with the same nonzero counts, giving a null
sample of correlations that is comparable to the observed estimate by
construction. Multiplicity is handled by Bonferroni or by thresholding
every component against the first (largest) component's null.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import SparsityPair
from .metrics import SplitSpec, matrix_values, out_of_sample_components
from .seeding import derive_rng, derive_seed
from .solver import SolverConfig, fit

__all__ = ["PermutationReport", "permutation_test"]

STATISTICS = ("in_sample", "out_of_sample")
CORRECTIONS = ("bonferroni", "max_statistic", "none")


@dataclass(frozen=True, eq=False)
class PermutationReport:
    """Observed statistics, null samples, p-values, and decisions.

    ``null_statistics`` is B x K in replicate order. ``p_values`` use the
    add-one formula (1 + #{null >= observed}) / (B + 1), so they live in
    [1/(B+1), 1] and are never exactly zero. ``decisions`` apply the chosen
    correction at ``alpha_level``.
    """

    observed: tuple[float, ...]
    null_statistics: np.ndarray
    p_values: tuple[float, ...]
    decisions: tuple[bool, ...]
    correction: str
    alpha_level: float
    statistic: str
    n_replicates: int
    permuted_side: str
    degenerate_replicates: tuple[tuple[int, int], ...]
    seed: int

    @property
    def n_components(self) -> int:
        return len(self.observed)


def _model_statistics(x1v, x2v, n_components, pairs, config, statistic, split):
    """Per-component statistic vector plus (component,) degeneracy flags."""
    flagged = []
    if statistic == "in_sample":
        model = fit(x1v, x2v, n_components, pairs, config)
        values = [c.rho_in for c in model.components]
    else:
        profile = out_of_sample_components(x1v, x2v, n_components, pairs, config, split)
        values = list(profile.mean)
        flagged = sorted({k for _, k in profile.degenerate})
    for k in range(len(values), n_components):
        values.append(0.0)
        flagged.append(k)
    return np.asarray(values), flagged


def permutation_test(
    x1,
    x2,
    n_components: int,
    sparsity,
    config: SolverConfig = SolverConfig(),
    n_replicates: int = 499,
    alpha_level: float = 0.05,
    statistic: str = "in_sample",
    correction: str = "bonferroni",
    permute: str = "x2",
    split: SplitSpec | None = None,
    workers: int = 1,
) -> PermutationReport:
    """Test each component's correlation against a permutation null.

    Parameters
    ----------
    x1, x2 : StandardizedMatrix or array
        The data blocks the observed model is fitted on.
    n_components, sparsity, config
        Passed to :func:`topkcca.solver.fit`; every permutation replicate
        reuses exactly the same sparsity pairs and component count.
    n_replicates : int
        Number of permutations B (at least 19).
    statistic : {"in_sample", "out_of_sample"}
        ``out_of_sample`` runs the repeated-holdout protocol (``split``)
        inside every replicate; slower, but it is the variant with clean
        Type-I behaviour on noise.
    correction : {"bonferroni", "max_statistic", "none"}
        ``bonferroni`` compares p-values to alpha/K; ``max_statistic``
        compares every observed value against the null sample of the first
        component (add-one tail count at ``alpha_level``).
    permute : {"x1", "x2"}
        Which dataset's rows are shuffled.
    workers : int
        Replicates run concurrently when > 1; replicate streams derive from
        (seed, replicate), so the schedule cannot change the report.
    """
    if n_replicates < 19:
        raise ValueError(f"need at least 19 replicates, got {n_replicates}")
    if not (0.0 < alpha_level < 1.0):
        raise ValueError(f"alpha_level must be in (0,1), got {alpha_level}")
    if statistic not in STATISTICS:
        raise ValueError(f"statistic must be one of {STATISTICS}, got {statistic!r}")
    if correction not in CORRECTIONS:
        raise ValueError(f"correction must be one of {CORRECTIONS}, got {correction!r}")
    if permute not in ("x1", "x2"):
        raise ValueError(f"permute must be 'x1' or 'x2', got {permute!r}")

    x1v = matrix_values(x1)
    x2v = matrix_values(x2)
    n = x1v.shape[0]
    if x2v.shape[0] != n:
        raise ValueError(f"row counts differ: {n} vs {x2v.shape[0]}")
    if isinstance(sparsity, SparsityPair):
        pairs: Sequence[SparsityPair] = [sparsity] * n_components
    else:
        pairs = list(sparsity)
        if len(pairs) == 1:
            pairs = pairs * n_components
    if split is None:
        split = SplitSpec(seed=config.seed)

    observed_pairs = tuple(pairs)
    observed, observed_flags = _model_statistics(
        x1v, x2v, n_components, observed_pairs, config, statistic, split
    )

    def one_replicate(b: int):
        perm = derive_rng(config.seed, b).permutation(n)
        if permute == "x2":
            x1p, x2p = x1v, x2v[perm]
        else:
            x1p, x2p = x1v[perm], x2v
        cfg_b = replace(config, seed=derive_seed(config.seed, b, 1))
        split_b = replace(split, seed=derive_seed(split.seed, b, 2))
        # the comparability contract: permuted fits reuse the observed counts
        assert tuple(pairs) == observed_pairs
        return _model_statistics(x1p, x2p, n_components, observed_pairs, cfg_b, statistic, split_b)

    indices = list(range(1, n_replicates + 1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_replicate, indices))
    else:
        results = [one_replicate(b) for b in indices]

    null = np.vstack([values for values, _ in results])
    degenerate = [(b, k) for b, (_, flags) in zip(indices, results) for k in flags]
    degenerate.extend((0, k) for k in observed_flags)

    bb = n_replicates
    p_values = tuple(
        float((1 + np.sum(null[:, k] >= observed[k])) / (bb + 1))
        for k in range(n_components)
    )
    if correction == "bonferroni":
        decisions = tuple(p <= alpha_level / n_components for p in p_values)
    elif correction == "max_statistic":
        first_null = null[:, 0]
        decisions = tuple(
            float((1 + np.sum(first_null >= observed[k])) / (bb + 1)) <= alpha_level
            for k in range(n_components)
        )
    else:
        decisions = tuple(p <= alpha_level for p in p_values)

    null.setflags(write=False)
    return PermutationReport(
        observed=tuple(float(v) for v in observed),
        null_statistics=null,
        p_values=p_values,
        decisions=decisions,
        correction=correction,
        alpha_level=alpha_level,
        statistic=statistic,
        n_replicates=n_replicates,
        permuted_side=permute,
        degenerate_replicates=tuple(degenerate),
        seed=config.seed,
    )
