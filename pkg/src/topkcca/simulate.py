"""Synthetic paired-data generator with planted sparse components.

A shared latent score drives both data blocks on disjoint variable
supports, so a true sparse canonical pair exists by construction. The
module also scores how well a fitted model recovers the planted supports.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import RawMatrix
from .metrics import CCAModel
from .seeding import derive_rng

__all__ = [
    "PlantedComponent",
    "SimulationDesign",
    "GroundTruth",
    "ComponentRecovery",
    "RecoveryScore",
    "generate",
    "score_recovery",
    "design_to_text",
    "design_from_text",
]

WEIGHT_PATTERNS = ("constant", "alternating_sign", "decaying")


def pattern_weights(size: int, pattern: str) -> np.ndarray:
    """Unit-norm on-support weight profile for a planted component."""
    if pattern == "constant":
        w = np.ones(size)
    elif pattern == "alternating_sign":
        w = np.where(np.arange(size) % 2 == 0, 1.0, -1.0)
    elif pattern == "decaying":
        w = 1.0 / (1.0 + np.arange(size))
    else:
        raise ValueError(f"unknown weight pattern {pattern!r}")
    return w / np.linalg.norm(w)


@dataclass(frozen=True)
class PlantedComponent:
    support_x1: tuple[int, ...]
    support_x2: tuple[int, ...]
    weight_pattern: str = "constant"
    latent_strength: float = 1.0

    def __post_init__(self):
        for name, sup in (("support_x1", self.support_x1), ("support_x2", self.support_x2)):
            sup = tuple(int(j) for j in sup)
            if len(sup) == 0:
                raise ValueError(f"{name} is empty")
            if len(set(sup)) != len(sup):
                raise ValueError(f"{name} has repeated indices")
            object.__setattr__(self, name, sup)
        if self.weight_pattern not in WEIGHT_PATTERNS:
            raise ValueError(f"weight_pattern must be one of {WEIGHT_PATTERNS}")
        if not self.latent_strength > 0:
            raise ValueError("latent_strength must be positive")


@dataclass(frozen=True)
class SimulationDesign:
    """Dimensions, planted components, and noise level of one simulation.

    Supports are disjoint across components within each side, and latent
    strengths strictly decrease so the planted ordering matches the
    estimation ordering convention (correlation decreasing in k).
    """

    n: int
    p: int
    q: int
    components: tuple[PlantedComponent, ...] = ()
    noise_sd: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.n < 2 or self.p < 1 or self.q < 1:
            raise ValueError(f"bad dimensions n={self.n}, p={self.p}, q={self.q}")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be positive")
        seen1: set[int] = set()
        seen2: set[int] = set()
        for idx, comp in enumerate(self.components):
            for j in comp.support_x1:
                if not 0 <= j < self.p:
                    raise ValueError(f"component {idx + 1}: x1 index {j} outside [0, {self.p})")
            for j in comp.support_x2:
                if not 0 <= j < self.q:
                    raise ValueError(f"component {idx + 1}: x2 index {j} outside [0, {self.q})")
            o1 = seen1.intersection(comp.support_x1)
            o2 = seen2.intersection(comp.support_x2)
            if o1 or o2:
                raise ValueError(f"component {idx + 1} overlaps earlier supports: {sorted(o1 or o2)[:5]}")
            seen1.update(comp.support_x1)
            seen2.update(comp.support_x2)
        strengths = [c.latent_strength for c in self.components]
        if any(b >= a for a, b in zip(strengths, strengths[1:])):
            raise ValueError(f"latent strengths must strictly decrease, got {strengths}")

    @property
    def n_components(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class GroundTruth:
    """Planted weights (columns per component), shared latents, and supports."""

    design: SimulationDesign
    weights_x1: np.ndarray  # p x K
    weights_x2: np.ndarray  # q x K
    latents: np.ndarray  # n x K

    @property
    def supports_x1(self) -> tuple[tuple[int, ...], ...]:
        return tuple(c.support_x1 for c in self.design.components)

    @property
    def supports_x2(self) -> tuple[tuple[int, ...], ...]:
        return tuple(c.support_x2 for c in self.design.components)


def generate(design: SimulationDesign) -> tuple[RawMatrix, RawMatrix, GroundTruth]:
    """Draw one dataset pair from the planted factor model.

    Per component k a latent score u_k ~ N(0, I_n) is shared by both sides:
    X1 = sum_k s_k u_k a_k' + E1 and X2 = sum_k s_k u_k b_k' + E2, with a_k,
    b_k unit-norm on their supports (zero elsewhere) and i.i.d. N(0,
    noise_sd^2) noise. Deterministic in the design seed.
    """
    rng = derive_rng(design.seed)
    n, p, q, kk = design.n, design.p, design.q, design.n_components
    latents = rng.standard_normal((n, kk)) if kk else np.zeros((n, 0))
    a = np.zeros((p, kk))
    b = np.zeros((q, kk))
    for k, comp in enumerate(design.components):
        a[list(comp.support_x1), k] = pattern_weights(len(comp.support_x1), comp.weight_pattern)
        b[list(comp.support_x2), k] = pattern_weights(len(comp.support_x2), comp.weight_pattern)
    strengths = np.array([c.latent_strength for c in design.components])
    signal = latents * strengths if kk else latents
    x1 = signal @ a.T + design.noise_sd * rng.standard_normal((n, p))
    x2 = signal @ b.T + design.noise_sd * rng.standard_normal((n, q))
    truth = GroundTruth(design, a, b, latents)
    return RawMatrix(x1), RawMatrix(x2), truth


def _set_scores(est: set, planted: set) -> tuple[float, float, float]:
    hits = len(est & planted)
    precision = hits / len(est) if est else 0.0
    recall = hits / len(planted) if planted else 0.0
    f1 = 0.0 if hits == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def _weighted_precision(weights: np.ndarray, planted: set) -> float:
    total = np.abs(weights).sum()
    if total == 0.0:
        return 0.0
    idx = np.fromiter(planted, dtype=int)
    return float(np.abs(weights[idx]).sum() / total)


@dataclass(frozen=True)
class ComponentRecovery:
    component: int  # 1-based estimation index
    matched: bool
    planted_index: int | None  # 1-based, None when unmatched
    precision_x1: float
    recall_x1: float
    f1_x1: float
    precision_x2: float
    recall_x2: float
    f1_x2: float
    weighted_precision_x1: float
    weighted_precision_x2: float


@dataclass(frozen=True)
class RecoveryScore:
    per_component: tuple[ComponentRecovery, ...]

    @property
    def n_matched(self) -> int:
        return sum(1 for r in self.per_component if r.matched)


def score_recovery(model: CCAModel, truth: GroundTruth) -> RecoveryScore:
    """Match estimated components to planted ones and score the supports.

    Pairs are assigned greedily by F1 on the x1 side (best pair first), so
    the score does not depend on the estimation order. Precision and recall
    use exact nonzero index sets; a magnitude-weighted precision (share of
    absolute weight mass on the planted support) is reported alongside.
    """
    est_x1 = [set(c.alpha.support.tolist()) for c in model.components]
    est_x2 = [set(c.beta.support.tolist()) for c in model.components]
    planted_x1 = [set(s) for s in truth.supports_x1]
    planted_x2 = [set(s) for s in truth.supports_x2]

    candidates = []
    for i, est in enumerate(est_x1):
        for k, pl in enumerate(planted_x1):
            f1 = _set_scores(est, pl)[2]
            candidates.append((-f1, k, i))
    candidates.sort()
    assignment: dict[int, int] = {}
    used_planted: set[int] = set()
    for neg_f1, k, i in candidates:
        if neg_f1 == 0.0:
            continue
        if i in assignment or k in used_planted:
            continue
        assignment[i] = k
        used_planted.add(k)

    rows = []
    for i, comp in enumerate(model.components):
        if i in assignment:
            k = assignment[i]
            p1, r1, f1 = _set_scores(est_x1[i], planted_x1[k])
            p2, r2, f2 = _set_scores(est_x2[i], planted_x2[k])
            rows.append(ComponentRecovery(
                component=i + 1, matched=True, planted_index=k + 1,
                precision_x1=p1, recall_x1=r1, f1_x1=f1,
                precision_x2=p2, recall_x2=r2, f1_x2=f2,
                weighted_precision_x1=_weighted_precision(comp.alpha.weights, planted_x1[k]),
                weighted_precision_x2=_weighted_precision(comp.beta.weights, planted_x2[k]),
            ))
        else:
            rows.append(ComponentRecovery(
                component=i + 1, matched=False, planted_index=None,
                precision_x1=0.0, recall_x1=0.0, f1_x1=0.0,
                precision_x2=0.0, recall_x2=0.0, f1_x2=0.0,
                weighted_precision_x1=0.0, weighted_precision_x2=0.0,
            ))
    return RecoveryScore(tuple(rows))


# ---------------------------------------------------------------------------
# plain-text serialization (same key=value format as the CLI config)

def _format_indices(indices: Sequence[int]) -> str:
    """Compact 'a-b,c' run-length form of a sorted index set."""
    idx = sorted(int(j) for j in indices)
    parts = []
    start = prev = idx[0]
    for j in idx[1:]:
        if j == prev + 1:
            prev = j
            continue
        parts.append(f"{start}-{prev}" if prev > start else f"{start}")
        start = prev = j
    parts.append(f"{start}-{prev}" if prev > start else f"{start}")
    return ",".join(parts)


def parse_indices(text: str) -> tuple[int, ...]:
    """Parse 'a-b,c,d-e' (inclusive ranges) into an index tuple."""
    out: list[int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "-" in chunk[1:]:  # allow a leading minus to fail loudly below
            lo_s, hi_s = chunk.split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise ValueError(f"bad index range {chunk!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(chunk))
    if not out:
        raise ValueError(f"no indices in {text!r}")
    return tuple(out)


def design_to_text(design: SimulationDesign) -> str:
    lines = [
        f"n = {design.n}",
        f"p = {design.p}",
        f"q = {design.q}",
        f"noise_sd = {design.noise_sd!r}",
        f"seed = {design.seed}",
        f"components = {design.n_components}",
    ]
    for k, comp in enumerate(design.components, start=1):
        lines.append(f"component{k}.support_x1 = {_format_indices(comp.support_x1)}")
        lines.append(f"component{k}.support_x2 = {_format_indices(comp.support_x2)}")
        lines.append(f"component{k}.weight_pattern = {comp.weight_pattern}")
        lines.append(f"component{k}.latent_strength = {comp.latent_strength!r}")
    return "\n".join(lines) + "\n"


def design_from_text(text: str) -> SimulationDesign:
    from .datafiles import parse_keyvalue_text

    kv = parse_keyvalue_text(text)
    try:
        n = int(kv.pop("n"))
        p = int(kv.pop("p"))
        q = int(kv.pop("q"))
    except KeyError as e:
        raise ValueError(f"design file is missing required key {e.args[0]!r}") from None
    noise_sd = float(kv.pop("noise_sd", 1.0))
    seed = int(kv.pop("seed", 0))
    n_comp = int(kv.pop("components", 0))
    comps = []
    for k in range(1, n_comp + 1):
        prefix = f"component{k}."
        try:
            sup1 = parse_indices(kv.pop(prefix + "support_x1"))
            sup2 = parse_indices(kv.pop(prefix + "support_x2"))
        except KeyError as e:
            raise ValueError(f"design file is missing key {e.args[0]!r}") from None
        pattern = kv.pop(prefix + "weight_pattern", "constant")
        strength = float(kv.pop(prefix + "latent_strength", 1.0))
        comps.append(PlantedComponent(sup1, sup2, pattern, strength))
    if kv:
        raise ValueError(f"unknown design keys: {sorted(kv)}")
    return SimulationDesign(n=n, p=p, q=q, components=tuple(comps), noise_sd=noise_sd, seed=seed)
