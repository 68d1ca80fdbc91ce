"""A sequence of components: deflation, explained variance, and the
correlation-adjusted variant that flags repeated information.

Run with:  python demos/03_multiple_components.py
"""

import numpy as np

from topkcca import (
    PlantedComponent,
    SimulationDesign,
    SolverConfig,
    SparsityPair,
    cross_component_correlation,
    fit,
    generate,
    score_recovery,
    standardize,
)

# Three planted components of decreasing strength plus one fitted noise
# component at the end.
design = SimulationDesign(
    n=100, p=600, q=300,
    components=(
        PlantedComponent(tuple(range(0, 30)), tuple(range(0, 30)), "constant", 20.0),
        PlantedComponent(tuple(range(40, 65)), tuple(range(40, 65)), "constant", 16.0),
        PlantedComponent(tuple(range(80, 100)), tuple(range(80, 100)), "constant", 13.0),
    ),
    noise_sd=1.0, seed=17,
)
x1_raw, x2_raw, truth = generate(design)
x1, x2 = standardize(x1_raw), standardize(x2_raw)

model = fit(x1, x2, 4, SparsityPair(30, 30),
            SolverConfig(seed=2, init_scheme="eigen"))

print("component  rho_in  iters  cpev_x1  adj_cpev_x1  increment")
prev = 0.0
for k, comp in enumerate(model.components, start=1):
    inc = model.adj_cpev_x1[k - 1] - prev
    prev = model.adj_cpev_x1[k - 1]
    print(f"{k:9d}  {comp.rho_in:.4f} {comp.iterations:6d}  {model.cpev_x1[k - 1]:.4f}   "
          f"{model.adj_cpev_x1[k - 1]:.4f}      {inc:.4f}")

print("\nthe adjusted curve plateaus once the planted signal is exhausted;")
print("component 4 is fitting noise.\n")

score = score_recovery(model, truth)
for r in score.per_component:
    tag = f"planted {r.planted_index}" if r.matched else "no planted match"
    print(f"component {r.component}: {tag}, recall_x1={r.recall_x1:.2f}, precision_x1={r.precision_x1:.2f}")

corr_g, _ = cross_component_correlation(model)
print("\nmax |cross-component latent correlation|:",
      f"{np.abs(corr_g - np.eye(model.n_components)).max():.2e}")
print("projection deflation keeps the fitted latents orthogonal, so the")
print("adjustment factor is ~1 here; it matters for estimators that revisit")
print("the same directions.")
