"""Command-line front end: analyze, simulate, and permtest subcommands.

Each run ingests delimited matrices (or generates them from a design
file), fits the sparse canonical sequence, and emits delimited tables plus
plot-ready long-format files and one machine-readable JSON run summary
that embeds the fully resolved configuration. All randomness funnels
through --seed, so repeating a command reproduces its artifacts byte for
byte.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .core import RawMatrix, SparsityPair, standardize
from .datafiles import (
    DataFileError,
    format_float,
    atomic_write_text,
    read_delimited_matrix,
    read_keyvalue_file,
    write_delimited_matrix,
    write_table,
)
from .metrics import SplitSpec, cross_component_correlation, out_of_sample_components
from .permtest import permutation_test
from .simulate import design_from_text, generate, score_recovery
from .solver import SolverConfig, fit

__all__ = ["main", "cmd_analyze", "cmd_simulate", "cmd_permtest", "RunConfig"]

SCHEMA_VERSION = 1
_CORRECTION_NAMES = {"bonferroni": "bonferroni", "max": "max_statistic", "none": "none"}


class CliError(Exception):
    """Input or configuration problem; maps to exit code 2."""


@dataclass
class RunConfig:
    """Fully resolved settings for one run (embedded in the run summary)."""

    command: str
    x1: str | None = None
    x2: str | None = None
    design: str | None = None
    delimiter: str = "auto"
    header: str = "auto"
    row_ids: str = "auto"
    transpose: bool = False
    log2: str = "none"
    zero_variance: str = "error"
    k: int = 1
    nnz_x1: tuple[int, ...] = ()
    nnz_x2: tuple[int, ...] = ()
    init: str = "uniform"
    restarts: int = 1
    tol: float = 1e-6
    max_iter: int = 500
    holdout: float = 0.2
    repeats: int = 10
    B: int = 499
    alpha: float = 0.05
    correction: str = "bonferroni"
    permute: str = "x2"
    statistic: str = "in-sample"
    seed: int = 0
    out_dir: str = "."
    threads: int = 1
    format: str = "tsv"
    explicit: tuple[str, ...] = ()

    @property
    def table_delimiter(self) -> str:
        return "," if self.format == "csv" else "\t"

    @property
    def table_ext(self) -> str:
        return "csv" if self.format == "csv" else "tsv"


def _comma_ints(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(t) for t in str(text).split(",") if t.strip() != "")
    except ValueError:
        raise CliError(f"expected a comma-separated integer list, got {text!r}") from None
    if not values:
        raise CliError(f"expected at least one integer in {text!r}")
    return values


def _bool_from(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise CliError(f"expected a boolean, got {text!r}")


# name -> (converter, choices or None); shared by flags and config files
_OPTION_TYPES = {
    "x1": (str, None),
    "x2": (str, None),
    "design": (str, None),
    "delimiter": (str, None),
    "header": (str, ("auto", "yes", "no")),
    "row_ids": (str, ("auto", "yes", "no")),
    "transpose": (_bool_from, None),
    "log2": (str, ("none", "x1", "x2", "both")),
    "zero_variance": (str, ("error", "drop")),
    "k": (int, None),
    "nnz_x1": (_comma_ints, None),
    "nnz_x2": (_comma_ints, None),
    "init": (str, ("uniform", "normal", "eigen")),
    "restarts": (int, None),
    "tol": (float, None),
    "max_iter": (int, None),
    "holdout": (float, None),
    "repeats": (int, None),
    "B": (int, None),
    "alpha": (float, None),
    "correction": (str, ("bonferroni", "max", "none")),
    "permute": (str, ("x1", "x2")),
    "statistic": (str, ("in-sample", "out-of-sample")),
    "seed": (int, None),
    "out_dir": (str, None),
    "threads": (int, None),
    "format": (str, ("tsv", "csv")),
}


def _add_common_flags(sp: argparse.ArgumentParser, with_inputs: bool) -> None:
    if with_inputs:
        sp.add_argument("--x1", help="delimited file for the first dataset (rows = samples)")
        sp.add_argument("--x2", help="delimited file for the second dataset")
    sp.add_argument("--config", help="key=value file; explicit flags override it")
    sp.add_argument("--delimiter", help="auto (default), tab, comma, or a single character")
    sp.add_argument("--header", choices=("auto", "yes", "no"), help="first row is a header")
    sp.add_argument("--row-ids", dest="row_ids", choices=("auto", "yes", "no"),
                    help="first column holds row ids")
    sp.add_argument("--transpose", action="store_const", const=True, default=None,
                    help="inputs are variable-by-sample; transpose after parsing")
    sp.add_argument("--log2", choices=("none", "x1", "x2", "both"),
                    help="log2-transform a side before standardization (opt-in)")
    sp.add_argument("--zero-variance", dest="zero_variance", choices=("error", "drop"),
                    help="what to do with constant columns (default error)")
    sp.add_argument("--k", type=int, help="number of components to estimate")
    sp.add_argument("--nnz-x1", dest="nnz_x1", help="comma list of nonzero counts for the x1 weights")
    sp.add_argument("--nnz-x2", dest="nnz_x2", help="comma list of nonzero counts for the x2 weights")
    sp.add_argument("--init", choices=("uniform", "normal", "eigen"), help="initialization scheme")
    sp.add_argument("--restarts", type=int, help="random restarts; keeps the best in-sample fit")
    sp.add_argument("--tol", type=float, help="correlation-change tolerance")
    sp.add_argument("--max-iter", dest="max_iter", type=int, help="iteration cap per component")
    sp.add_argument("--holdout", type=float, help="holdout fraction for out-of-sample correlation")
    sp.add_argument("--repeats", type=int, help="holdout repeats (0 skips out-of-sample)")
    sp.add_argument("--B", dest="B", type=int, help="permutation replicates")
    sp.add_argument("--alpha", type=float, help="significance level")
    sp.add_argument("--correction", choices=("bonferroni", "max", "none"), help="multiplicity correction")
    sp.add_argument("--permute", choices=("x1", "x2"), help="which dataset to permute")
    sp.add_argument("--statistic", choices=("in-sample", "out-of-sample"),
                    help="permutation test statistic")
    sp.add_argument("--seed", type=int, help="seed for every random stream of the run")
    sp.add_argument("--out-dir", dest="out_dir", help="output directory")
    sp.add_argument("--threads", type=int, help="worker budget hint for permutation replicates")
    sp.add_argument("--format", choices=("tsv", "csv"), help="output table format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topkcca",
        description="Sparse canonical correlation analysis with exact nonzero-count control.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("analyze", help="fit components on two delimited matrices")
    _add_common_flags(sp, with_inputs=True)

    sp = sub.add_parser("simulate", help="generate planted data, fit, and score recovery")
    sp.add_argument("--design", help="simulation design file (key=value)")
    _add_common_flags(sp, with_inputs=False)

    sp = sub.add_parser("permtest", help="permutation significance test on two matrices")
    _add_common_flags(sp, with_inputs=True)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge built-in defaults, the --config file, and explicit flags (flags win)."""
    cfg = RunConfig(command=args.command)
    file_values: dict[str, str] = {}
    if getattr(args, "config", None):
        file_values = read_keyvalue_file(args.config)
    for key, raw in file_values.items():
        name = key.replace("-", "_")
        if name not in _OPTION_TYPES:
            raise CliError(f"unknown config key {key!r}")
        conv, choices = _OPTION_TYPES[name]
        try:
            value = conv(raw)
        except (TypeError, ValueError) as exc:
            raise CliError(f"config key {key!r}: {exc}") from None
        if choices is not None and value not in choices:
            raise CliError(f"config key {key!r} must be one of {choices}, got {raw!r}")
        setattr(cfg, name, value)
    explicit = []
    for name in _OPTION_TYPES:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            conv, _ = _OPTION_TYPES[name]
            setattr(cfg, name, conv(flag_value))
            explicit.append(name)
    cfg.explicit = tuple(sorted(explicit))
    return cfg


def _config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["nnz_x1"] = list(cfg.nnz_x1)
    d["nnz_x2"] = list(cfg.nnz_x2)
    d["explicit"] = list(cfg.explicit)
    return d


def _sparsity_pairs(cfg: RunConfig, p: int, q: int) -> list[SparsityPair]:
    if not cfg.nnz_x1 or not cfg.nnz_x2:
        raise CliError("--nnz-x1 and --nnz-x2 are required (counts of nonzero weights)")
    a, b = list(cfg.nnz_x1), list(cfg.nnz_x2)
    if len(a) == 1:
        a = a * cfg.k
    if len(b) == 1:
        b = b * cfg.k
    if len(a) != cfg.k or len(b) != cfg.k:
        raise CliError(
            f"--nnz lists must have 1 or --k={cfg.k} entries, got {len(cfg.nnz_x1)} and {len(cfg.nnz_x2)}"
        )
    try:
        pairs = [SparsityPair(ka, kb) for ka, kb in zip(a, b)]
        for pair in pairs:
            pair.validate_for(p, q)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    return pairs


def _solver_config(cfg: RunConfig) -> SolverConfig:
    try:
        return SolverConfig(
            tolerance=cfg.tol,
            max_iterations=cfg.max_iter,
            init_scheme=cfg.init,
            seed=cfg.seed,
            restarts=cfg.restarts,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _load_pair(cfg: RunConfig) -> tuple[RawMatrix, RawMatrix]:
    if not cfg.x1 or not cfg.x2:
        raise CliError("--x1 and --x2 input files are required")
    x1 = read_delimited_matrix(cfg.x1, cfg.delimiter, cfg.header, cfg.row_ids, cfg.transpose)
    x2 = read_delimited_matrix(cfg.x2, cfg.delimiter, cfg.header, cfg.row_ids, cfg.transpose)
    return _align_rows(x1, x2)


def _align_rows(x1: RawMatrix, x2: RawMatrix) -> tuple[RawMatrix, RawMatrix]:
    """Join on row ids when both sides carry them, else align by order."""
    if x1.row_ids is not None and x2.row_ids is not None:
        if x1.row_ids != x2.row_ids:
            missing = sorted(set(x1.row_ids) ^ set(x2.row_ids))
            if missing:
                raise CliError(
                    f"row ids differ between inputs ({len(missing)} unmatched, "
                    f"e.g. {missing[:5]}); cannot align"
                )
            order = [x2.row_ids.index(r) for r in x1.row_ids]
            x2 = RawMatrix(x2.values[order], x2.column_names, x1.row_ids)
    if x1.n_rows != x2.n_rows:
        raise CliError(f"row counts differ: x1 has {x1.n_rows} rows, x2 has {x2.n_rows}")
    return x1, x2


def _apply_log2(x1: RawMatrix, x2: RawMatrix, mode: str) -> tuple[RawMatrix, RawMatrix]:
    def transform(m: RawMatrix, label: str) -> RawMatrix:
        if (m.values <= 0).any():
            r, c = np.argwhere(m.values <= 0)[0]
            raise CliError(f"--log2 {mode}: {label} has a non-positive entry at row {r}, column {c}")
        return RawMatrix(np.log2(m.values), m.column_names, m.row_ids)

    if mode in ("x1", "both"):
        x1 = transform(x1, "x1")
    if mode in ("x2", "both"):
        x2 = transform(x2, "x2")
    return x1, x2


def _write_json(path, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _emit_model_artifacts(cfg: RunConfig, model, x1s, x2s, out: Path, warnings_list: list[str]) -> dict:
    """Write weight/score/summary/plot tables; returns the JSON model section."""
    sep = cfg.table_delimiter
    ext = cfg.table_ext
    names1 = x1s.column_names or tuple(f"x1_{j + 1}" for j in range(x1s.n_cols))
    names2 = x2s.column_names or tuple(f"x2_{j + 1}" for j in range(x2s.n_cols))
    ids = x1s.row_ids or tuple(f"s{i + 1}" for i in range(x1s.n_rows))

    for side, names, pick in (("x1", names1, "alpha"), ("x2", names2, "beta")):
        rows = []
        for k, comp in enumerate(model.components, start=1):
            wv = getattr(comp, pick)
            unit = wv.unit()
            support = wv.support
            order = support[np.argsort(-np.abs(wv.weights[support]), kind="stable")]
            for rank, j in enumerate(order, start=1):
                rows.append((k, int(j), names[j], wv.weights[j], unit[j], rank))
        write_table(out / f"weights_{side}.{ext}",
                    ("component", "variable_index", "variable", "weight", "normalized_weight", "rank"),
                    rows, sep)

    kk = model.n_components
    header = ["row_id"] + [f"gamma_{k}" for k in range(1, kk + 1)] + [f"zeta_{k}" for k in range(1, kk + 1)]
    score_rows = []
    for i, rid in enumerate(ids):
        row = [rid]
        row += [c.gamma[i] for c in model.components]
        row += [c.zeta[i] for c in model.components]
        score_rows.append(row)
    write_table(out / f"latent_scores.{ext}", header, score_rows, sep)

    summary_rows = []
    for k, comp in enumerate(model.components, start=1):
        summary_rows.append((
            k, comp.rho_in,
            "NA" if comp.rho_out is None else format_float(comp.rho_out),
            comp.iterations, comp.converged,
            comp.alpha.nnz, comp.beta.nnz,
            model.cpev_x1[k - 1], model.cpev_x2[k - 1],
            model.adj_cpev_x1[k - 1], model.adj_cpev_x2[k - 1],
        ))
    write_table(out / f"summary.{ext}",
                ("component", "rho_in", "rho_out", "iterations", "converged",
                 "nnz_x1", "nnz_x2", "cpev_x1", "cpev_x2", "adj_cpev_x1", "adj_cpev_x2"),
                summary_rows, sep)

    corr_g, corr_z = cross_component_correlation(model) if kk else (np.zeros((0, 0)),) * 2
    for label, corr in (("gamma", corr_g), ("zeta", corr_z)):
        write_table(out / f"latent_correlations_{label}.{ext}",
                    ["component"] + [str(k) for k in range(1, kk + 1)],
                    [[k + 1, *corr[k]] for k in range(kk)], sep)

    profile_rows = []
    for k, comp in enumerate(model.components, start=1):
        unit_a = comp.alpha.unit()
        unit_b = comp.beta.unit()
        for j in range(len(names1)):
            profile_rows.append(("x1", k, j, names1[j], comp.alpha.weights[j], unit_a[j]))
        for j in range(len(names2)):
            profile_rows.append(("x2", k, j, names2[j], comp.beta.weights[j], unit_b[j]))
    write_table(out / f"plot_weight_profiles.{ext}",
                ("side", "component", "variable_index", "variable", "weight", "normalized_weight"),
                profile_rows, sep)

    cpev_rows = []
    for k in range(1, kk + 1):
        cpev_rows.append(("x1", k, model.cpev_x1[k - 1], model.adj_cpev_x1[k - 1]))
        cpev_rows.append(("x2", k, model.cpev_x2[k - 1], model.adj_cpev_x2[k - 1]))
    write_table(out / f"plot_cpev.{ext}", ("side", "component", "cpev", "adj_cpev"), cpev_rows, sep)

    score_long = []
    for k, comp in enumerate(model.components, start=1):
        for i, rid in enumerate(ids):
            score_long.append((rid, k, comp.gamma[i], comp.zeta[i]))
    write_table(out / f"plot_scores.{ext}", ("row_id", "component", "gamma", "zeta"), score_long, sep)

    return {
        "requested_components": model.requested_components,
        "fitted_components": kk,
        "truncated": model.truncated,
        "components": [
            {
                "component": k,
                "rho_in": comp.rho_in,
                "rho_out": comp.rho_out,
                "iterations": comp.iterations,
                "converged": comp.converged,
                "nnz_x1": comp.alpha.nnz,
                "nnz_x2": comp.beta.nnz,
                "cpev_x1": model.cpev_x1[k - 1],
                "cpev_x2": model.cpev_x2[k - 1],
                "adj_cpev_x1": model.adj_cpev_x1[k - 1],
                "adj_cpev_x2": model.adj_cpev_x2[k - 1],
            }
            for k, comp in enumerate(model.components, start=1)
        ],
        "latent_correlations_gamma": corr_g.tolist(),
        "latent_correlations_zeta": corr_z.tolist(),
        "deflation_trail": [
            {
                "component": r.component,
                "x1_frobenius": r.x1_frobenius,
                "x2_frobenius": r.x2_frobenius,
                "x1_sha256": r.x1_sha256,
                "x2_sha256": r.x2_sha256,
            }
            for r in model.deflation_trail
        ],
    }


def _fit_pipeline(cfg: RunConfig, x1_raw: RawMatrix, x2_raw: RawMatrix, out: Path,
                  warnings_list: list[str]):
    """Standardize, fit, optionally attach out-of-sample correlations, emit tables."""
    x1_raw, x2_raw = _apply_log2(x1_raw, x2_raw, cfg.log2)
    try:
        x1s = standardize(x1_raw, cfg.zero_variance)
        x2s = standardize(x2_raw, cfg.zero_variance)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    for label, m in (("x1", x1s), ("x2", x2s)):
        if m.dropped_columns:
            warnings_list.append(f"{label}: dropped {len(m.dropped_columns)} zero-variance column(s)")
    pairs = _sparsity_pairs(cfg, x1s.n_cols, x2s.n_cols)
    solver_cfg = _solver_config(cfg)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            model = fit(x1s, x2s, cfg.k, pairs, solver_cfg)
        except ValueError as exc:
            raise CliError(str(exc)) from None
    for w in caught:
        warnings_list.append(str(w.message))

    if cfg.repeats > 0 and model.n_components > 0:
        try:
            split = SplitSpec(holdout_fraction=cfg.holdout, repeats=cfg.repeats, seed=cfg.seed)
            profile = out_of_sample_components(
                x1s.values, x2s.values, model.n_components,
                pairs[: model.n_components], solver_cfg, split,
            )
        except ValueError as exc:
            raise CliError(str(exc)) from None
        model = model.with_rho_out(profile.mean)

    section = _emit_model_artifacts(cfg, model, x1s, x2s, out, warnings_list)
    data_section = {
        "n": x1s.n_rows,
        "p": x1s.n_cols,
        "q": x2s.n_cols,
        "x1_dropped_columns": list(x1s.dropped_columns),
        "x2_dropped_columns": list(x2s.dropped_columns),
    }
    return model, x1s, x2s, section, data_section


def cmd_analyze(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    warnings_list: list[str] = []
    x1_raw, x2_raw = _load_pair(cfg)
    model, x1s, x2s, model_section, data_section = _fit_pipeline(cfg, x1_raw, x2_raw, out, warnings_list)
    _write_json(out / "run_summary.json", {
        "tool": "topkcca",
        "schema_version": SCHEMA_VERSION,
        "command": "analyze",
        "config": _config_dict(cfg),
        "data": data_section,
        "model": model_section,
        "warnings": warnings_list,
    })
    for w in warnings_list:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    if not cfg.design:
        raise CliError("--design file is required for simulate")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    warnings_list: list[str] = []
    design_path = Path(cfg.design)
    if not design_path.exists():
        raise CliError(f"design file not found: {design_path}")
    try:
        design = design_from_text(design_path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise CliError(f"{design_path}: {exc}") from None
    if "seed" in cfg.explicit:
        # an explicit --seed overrides the design file, so seed sweeps need one file
        design = type(design)(n=design.n, p=design.p, q=design.q, components=design.components,
                              noise_sd=design.noise_sd, seed=cfg.seed)
    else:
        cfg.seed = design.seed
    x1_raw, x2_raw, truth = generate(design)
    names1 = tuple(f"x1_{j + 1}" for j in range(design.p))
    names2 = tuple(f"x2_{j + 1}" for j in range(design.q))
    ids = tuple(f"s{i + 1}" for i in range(design.n))
    x1_raw = RawMatrix(x1_raw.values, names1, ids)
    x2_raw = RawMatrix(x2_raw.values, names2, ids)
    ext = cfg.table_ext
    sep = cfg.table_delimiter
    write_delimited_matrix(out / f"x1.{ext}", x1_raw, sep)
    write_delimited_matrix(out / f"x2.{ext}", x2_raw, sep)

    truth_rows = []
    for k in range(design.n_components):
        for j in sorted(truth.supports_x1[k]):
            truth_rows.append(("x1", k + 1, j, names1[j], truth.weights_x1[j, k]))
        for j in sorted(truth.supports_x2[k]):
            truth_rows.append(("x2", k + 1, j, names2[j], truth.weights_x2[j, k]))
    write_table(out / f"truth_weights.{ext}",
                ("side", "component", "variable_index", "variable", "weight"), truth_rows, sep)
    write_table(out / f"truth_latents.{ext}",
                ["row_id"] + [f"u_{k + 1}" for k in range(design.n_components)],
                [[ids[i], *truth.latents[i]] for i in range(design.n)], sep)

    model, x1s, x2s, model_section, data_section = _fit_pipeline(cfg, x1_raw, x2_raw, out, warnings_list)

    score = score_recovery(model, truth)
    write_table(out / f"recovery_scores.{ext}",
                ("component", "matched", "planted_index", "precision_x1", "recall_x1", "f1_x1",
                 "precision_x2", "recall_x2", "f1_x2", "weighted_precision_x1", "weighted_precision_x2"),
                [(r.component, r.matched, "NA" if r.planted_index is None else r.planted_index,
                  r.precision_x1, r.recall_x1, r.f1_x1, r.precision_x2, r.recall_x2, r.f1_x2,
                  r.weighted_precision_x1, r.weighted_precision_x2)
                 for r in score.per_component], sep)

    overlay_rows = []
    matched_planted = {r.component: r.planted_index for r in score.per_component if r.matched}
    for k, comp in enumerate(model.components, start=1):
        kp = matched_planted.get(k)
        for j in range(design.p):
            true_w = truth.weights_x1[j, kp - 1] if kp else 0.0
            overlay_rows.append(("x1", k, j, true_w, comp.alpha.weights[j]))
        for j in range(design.q):
            true_w = truth.weights_x2[j, kp - 1] if kp else 0.0
            overlay_rows.append(("x2", k, j, true_w, comp.beta.weights[j]))
    write_table(out / f"plot_truth_vs_estimate.{ext}",
                ("side", "component", "variable_index", "true_weight", "estimated_weight"),
                overlay_rows, sep)

    _write_json(out / "run_summary.json", {
        "tool": "topkcca",
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "config": _config_dict(cfg),
        "design": {
            "n": design.n, "p": design.p, "q": design.q,
            "noise_sd": design.noise_sd, "seed": design.seed,
            "components": [
                {"support_x1_size": len(c.support_x1), "support_x2_size": len(c.support_x2),
                 "weight_pattern": c.weight_pattern, "latent_strength": c.latent_strength}
                for c in design.components
            ],
        },
        "data": data_section,
        "model": model_section,
        "recovery": [
            {"component": r.component, "matched": r.matched, "planted_index": r.planted_index,
             "precision_x1": r.precision_x1, "recall_x1": r.recall_x1, "f1_x1": r.f1_x1,
             "precision_x2": r.precision_x2, "recall_x2": r.recall_x2, "f1_x2": r.f1_x2,
             "weighted_precision_x1": r.weighted_precision_x1,
             "weighted_precision_x2": r.weighted_precision_x2}
            for r in score.per_component
        ],
        "warnings": warnings_list,
    })
    for w in warnings_list:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_permtest(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    warnings_list: list[str] = []
    x1_raw, x2_raw = _load_pair(cfg)
    x1_raw, x2_raw = _apply_log2(x1_raw, x2_raw, cfg.log2)
    try:
        x1s = standardize(x1_raw, cfg.zero_variance)
        x2s = standardize(x2_raw, cfg.zero_variance)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    pairs = _sparsity_pairs(cfg, x1s.n_cols, x2s.n_cols)
    solver_cfg = _solver_config(cfg)
    statistic = "out_of_sample" if cfg.statistic == "out-of-sample" else "in_sample"
    if statistic == "out_of_sample" and cfg.repeats < 1:
        raise CliError("--repeats must be >= 1 for the out-of-sample statistic")
    try:
        split = SplitSpec(holdout_fraction=cfg.holdout, repeats=max(cfg.repeats, 1), seed=cfg.seed)
        report = permutation_test(
            x1s.values, x2s.values, cfg.k, pairs, solver_cfg,
            n_replicates=cfg.B, alpha_level=cfg.alpha, statistic=statistic,
            correction=_CORRECTION_NAMES[cfg.correction], permute=cfg.permute,
            split=split, workers=max(cfg.threads, 1),
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None

    sep = cfg.table_delimiter
    ext = cfg.table_ext
    write_table(out / f"permtest_results.{ext}",
                ("component", "observed", "p_value", "significant", "correction", "alpha"),
                [(k + 1, report.observed[k], report.p_values[k], report.decisions[k],
                  report.correction, report.alpha_level)
                 for k in range(report.n_components)], sep)
    null_rows = []
    for b in range(report.n_replicates):
        for k in range(report.n_components):
            null_rows.append((b + 1, k + 1, report.null_statistics[b, k]))
    write_table(out / f"null_statistics.{ext}", ("replicate", "component", "statistic"), null_rows, sep)
    write_table(out / f"plot_null_histograms.{ext}",
                ("component", "replicate", "null_statistic", "observed_statistic"),
                [(k + 1, b + 1, report.null_statistics[b, k], report.observed[k])
                 for k in range(report.n_components) for b in range(report.n_replicates)], sep)

    _write_json(out / "run_summary.json", {
        "tool": "topkcca",
        "schema_version": SCHEMA_VERSION,
        "command": "permtest",
        "config": _config_dict(cfg),
        "data": {"n": x1s.n_rows, "p": x1s.n_cols, "q": x2s.n_cols,
                 "x1_dropped_columns": list(x1s.dropped_columns),
                 "x2_dropped_columns": list(x2s.dropped_columns)},
        "permutation": {
            "statistic": report.statistic,
            "correction": report.correction,
            "alpha_level": report.alpha_level,
            "n_replicates": report.n_replicates,
            "permuted_side": report.permuted_side,
            "observed": list(report.observed),
            "p_values": list(report.p_values),
            "decisions": list(report.decisions),
            "degenerate_replicates": [list(t) for t in report.degenerate_replicates],
        },
        "warnings": warnings_list,
    })
    for w in warnings_list:
        print(f"warning: {w}", file=sys.stderr)
    return 0


_COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "permtest": cmd_permtest}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return _COMMANDS[args.command](cfg)
    except (CliError, DataFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
