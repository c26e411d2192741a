"""Command-line interface.

Exit codes: 0 success, 2 bad input or configuration, 3 fit did not
converge (the report is still written), 4 not enough data for a diagnostic.
Data and JSON go to stdout; human-readable messages go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .baseline import breslow_baseline, conditional_cdf
from .core import HazrankError, InsufficientDataError, ScoreModel, SurvivalDataset
from .cox import cox_fit, cox_partial_loglik, build_risk_sets, rankings_to_pseudotimes
from .diagnose import crossing_detect, empirical_cdf, ph_test
from .dpo import TabularPolicy, fit_dpo_offsets
from .figure import CDF_COLUMNS, HAZARD_COLUMNS, figure_data
from .io import (
    ConfigError,
    ParseError,
    config_hash,
    dumps,
    load_config,
    parse_diagnose,
    parse_figure,
    parse_fit,
    parse_simspec,
    read_dataset,
    simspec_to_dict,
    write_json,
    write_pairs_csv,
    write_ranking_csv,
    write_utility_csv,
)
from .plackett_luce import RankingDataset, pl_fit
from .simulate import simulate, utilities_to_rankings

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED, EXIT_INSUFFICIENT = 0, 2, 3, 4


class CLIError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _emit(doc, out: str | None) -> None:
    if out:
        write_json(out, doc)
    else:
        sys.stdout.write(dumps(doc) + "\n")


def _provenance(doc: dict, seed) -> dict:
    return {"config_hash": config_hash(doc), "seed": seed, "version": __version__}


def _fit_report(result, feature_names, model: str, ties: str | None) -> dict:
    return {
        "model": model,
        "ties": ties,
        "feature_names": list(feature_names),
        "beta": result.beta.tolist(),
        "se": result.standard_errors.tolist(),
        "log_likelihood": result.log_likelihood,
        "gradient_norm": result.gradient_norm,
        "iterations": result.iterations,
        "converged": result.converged,
        "warnings": list(result.warnings),
    }


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    doc = load_config(args.config)
    if "simulate" not in doc:
        raise ConfigError("simulate", "missing section")
    spec = parse_simspec(doc["simulate"], seed=args.seed)
    data = simulate(spec)
    out = Path(args.out)
    meta = {"spec": simspec_to_dict(spec), **_provenance(doc, spec.seed)}
    if spec.group_size:
        ranked = utilities_to_rankings(data, spec.group_size, spec.seed)
        write_ranking_csv(out, ranked)
        meta["dropped_groups"] = ranked.dropped_groups
        print(f"wrote {len(ranked)} rankings to {out} ({ranked.dropped_groups} tied groups dropped)", file=sys.stderr)
    else:
        write_utility_csv(out, data)
        print(f"wrote {data.n} records to {out}", file=sys.stderr)
    write_json(str(out) + ".meta.json", meta)
    return EXIT_OK


def cmd_fit(args) -> int:
    doc = load_config(args.config)
    section = parse_fit(doc.get("fit"))
    model = args.model or section.model
    ties = args.ties or section.ties
    data = read_dataset(args.data)

    if isinstance(data, np.ndarray):
        if model not in (None, "dpo"):
            raise CLIError(f"a chosen,rejected file can only be fitted with model 'dpo', not {model!r}")
        m = args.responses or int(data.max()) + 1
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always")
            result = fit_dpo_offsets(data, m, section.beta_temp, section.config)
        policy = TabularPolicy(np.concatenate(([0.0], result.beta)))
        report = _fit_report(result, [f"r{k}" for k in range(1, m)], "dpo", None)
        report["log_probs"] = policy.log_probs.tolist()
        report["beta_temp"] = section.beta_temp
    elif isinstance(data, SurvivalDataset):
        if model not in (None, "cox"):
            raise CLIError(f"a utility file can only be fitted with model 'cox', not {model!r}")
        if args.check_equivalence:
            raise CLIError("--check-equivalence needs a ranking file")
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always")
            result = cox_fit(data, section.config, ties)
        report = _fit_report(result, data.feature_names, "cox", ties)
    else:
        if model not in (None, "pl"):
            raise CLIError(f"a ranking file can only be fitted with model 'pl', not {model!r}")
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always")
            result = pl_fit(data, section.config)
            report = _fit_report(result, data.feature_names, "pl", None)
            if args.check_equivalence:
                report["equivalence"] = _equivalence(data, result, section.config)

    report.update(_provenance(doc, None))
    _emit(report, args.out)
    for note in result.warnings:
        print(f"warning: {note}", file=sys.stderr)
    if "equivalence" in report:
        eq = report["equivalence"]
        print(
            f"equivalence: max |dloglik| = {eq['max_abs_loglik_diff']:.3e}, "
            f"max |dbeta| = {eq['max_abs_beta_diff']:.3e}",
            file=sys.stderr,
        )
    if not result.converged:
        print("fit did not converge", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _equivalence(data: RankingDataset, pl_result, config) -> dict:
    """Refit the rankings as Cox pseudo-time data and measure the discrepancy."""
    from .plackett_luce import pl_log_likelihood

    converted = rankings_to_pseudotimes(data.instances)
    cox_result = cox_fit(converted, config)
    beta = pl_result.beta
    loglik_diff = max(
        abs(pl_log_likelihood(inst.X @ beta, inst.order) - cox_partial_loglik(ds.X, beta, build_risk_sets(ds)))
        for inst, ds in zip(data.instances, converted)
    )
    return {
        "cox_beta": cox_result.beta.tolist(),
        "cox_log_likelihood": cox_result.log_likelihood,
        "max_abs_loglik_diff": float(loglik_diff),
        "max_abs_beta_diff": float(np.max(np.abs(cox_result.beta - beta))),
    }


def _parse_profile(text: str | None, d: int) -> np.ndarray:
    if text is None:
        return np.zeros(d)
    try:
        x = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise CLIError(f"--at must be comma-separated numbers, got {text!r}") from None
    if x.size != d:
        raise CLIError(f"--at has {x.size} values but the data has {d} features")
    return x


def cmd_baseline(args) -> int:
    data = read_dataset(args.data)
    if not isinstance(data, SurvivalDataset):
        raise CLIError("baseline needs a utility file")
    try:
        fit_doc = json.loads(Path(args.fit).read_text(encoding="utf-8"))
        beta = np.asarray(fit_doc["beta"], dtype=float)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CLIError(f"cannot read a beta vector from {args.fit}: {exc}") from None
    if beta.size != data.d:
        raise CLIError(f"fit has {beta.size} coefficients but the data has {data.d} features")
    profile = _parse_profile(args.at, data.d)
    base = breslow_baseline(data, ScoreModel(beta))
    score = float(profile @ beta)
    cdf = conditional_cdf(base, score)
    columns = ("u", "cumulative_hazard", "survival", "cdf")
    table = list(zip(base.event_utilities, base.cumulative_hazard.values, base.survival.values, cdf.values))
    if args.format == "json":
        doc = {
            "profile": profile.tolist(),
            "score": score,
            **{name: [float(row[k]) for row in table] for k, name in enumerate(columns)},
        }
        _emit(doc, args.out)
    else:
        fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for row in table:
                w.writerow([repr(float(v)) for v in row])
        finally:
            if args.out:
                fh.close()
    return EXIT_OK


def _split_by_column(data: SurvivalDataset, column: str):
    if column not in data.feature_names:
        raise CLIError(f"group column {column!r} not in {list(data.feature_names)}")
    k = data.feature_names.index(column)
    levels = np.unique(data.X[:, k])
    if levels.size != 2:
        raise CLIError(f"group column {column!r} must take exactly two values, found {levels.size}")
    return [data.utilities[data.X[:, k] == lv] for lv in levels], data


def cmd_diagnose(args) -> int:
    doc = load_config(args.config)
    opts = parse_diagnose(doc.get("diagnose"))
    for key in ("epsilon", "z_crit", "min_n", "group_column"):
        value = getattr(args, key)
        if value is not None:
            opts[key] = value
    datasets = [read_dataset(p) for p in args.data]
    if not all(isinstance(d, SurvivalDataset) for d in datasets):
        raise CLIError("diagnose needs utility files")
    if len(datasets) == 2:
        groups = [datasets[0].utilities, datasets[1].utilities]
        indicator = np.repeat([0.0, 1.0], [datasets[0].n, datasets[1].n])
        pooled = SurvivalDataset(indicator[:, None], np.concatenate(groups), ("group",))
    elif len(datasets) == 1 and opts["group_column"]:
        groups, pooled = _split_by_column(datasets[0], opts["group_column"])
    else:
        raise CLIError("give two data files, or one file and --group-column")

    for k, g in enumerate(groups):
        if g.size < opts["min_n"]:
            raise InsufficientDataError(f"group {k} has {g.size} records; need at least {opts['min_n']}")
    crossing = crossing_detect(empirical_cdf(groups[0]), empirical_cdf(groups[1]), opts["epsilon"], opts["min_n"])
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        fit = cox_fit(pooled)
    report = {
        "crossing": crossing.to_dict(),
        "verdict": crossing.dominance_verdict.value,
        "ph_test": ph_test(pooled, fit, opts["z_crit"]).to_dict(),
        "fit_beta": fit.beta.tolist(),
        **_provenance(doc, None),
    }
    _emit(report, args.out)
    return EXIT_OK


def cmd_figure(args) -> int:
    doc = load_config(args.config)
    fig = parse_figure(doc.get("figure"))
    seed = args.seed if args.seed is not None else fig["seed"]
    cdf_rows, hazard_rows, reports = figure_data(
        fig["n"], seed, fig["groups"], fig["grid_points"], fig["epsilon"]
    )
    out_dir = Path(args.out_dir or doc.get("output", {}).get("dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, columns, rows in (
        ("figure_cdf.csv", CDF_COLUMNS, cdf_rows),
        ("figure_hazard.csv", HAZARD_COLUMNS, hazard_rows),
    ):
        with open(out_dir / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for group, u, v in rows:
                w.writerow([group, repr(u), repr(v)])
    summary = {
        "pairs": {pair: rep.to_dict() for pair, rep in reports.items()},
        "files": [str(out_dir / "figure_cdf.csv"), str(out_dir / "figure_hazard.csv")],
        **_provenance(doc, seed),
    }
    _emit(summary, None)
    return EXIT_OK


def cmd_dpo_demo(args) -> int:
    """Two responses, response 0 chosen in a fixed share of the pairs."""
    wins = int(round(args.share * args.pairs))
    pairs = [(0, 1)] * wins + [(1, 0)] * (args.pairs - wins)
    if args.pairs_out:
        write_pairs_csv(args.pairs_out, pairs)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        result = fit_dpo_offsets(pairs, 2, args.beta_temp)
    ref = TabularPolicy.uniform(2)
    policy = TabularPolicy(ref.log_probs + np.concatenate(([0.0], result.beta)))
    gap = args.beta_temp * ((policy.log_probs[0] - ref.log_probs[0]) - (policy.log_probs[1] - ref.log_probs[1]))
    doc = {
        "pairs": args.pairs,
        "share_chosen": wins / args.pairs,
        "beta_temp": args.beta_temp,
        "score_gap": float(gap),
        "expected_gap": float(np.log(wins / (args.pairs - wins))) if 0 < wins < args.pairs else None,
        "log_probs": policy.log_probs.tolist(),
        "converged": result.converged,
        "warnings": result.warnings,
    }
    _emit(doc, args.out)
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hazrank", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"hazrank {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a dataset from the config's simulate section")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="overrides simulate.seed and $HAZRANK_SEED")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a Cox, Plackett-Luce or DPO model to a data file")
    p.add_argument("data")
    p.add_argument("--config")
    p.add_argument("--model", choices=("cox", "pl", "dpo"))
    p.add_argument("--ties", choices=("breslow", "efron"))
    p.add_argument("--responses", type=int, help="number of responses for a DPO pairs file")
    p.add_argument("--check-equivalence", action="store_true",
                   help="also fit the rankings as Cox pseudo-time data and report the discrepancy")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("baseline", help="Breslow baseline and conditional CDF table")
    p.add_argument("data")
    p.add_argument("--fit", required=True, help="fit report JSON with a 'beta' field")
    p.add_argument("--at", help="comma-separated covariate profile (default: zeros)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("diagnose", help="CDF crossing and Schoenfeld PH test")
    p.add_argument("data", nargs="+")
    p.add_argument("--config")
    p.add_argument("--group-column", dest="group_column")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--z-crit", dest="z_crit", type=float)
    p.add_argument("--min-n", dest="min_n", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("figure", help="CDF and hazard-ratio curve tables for three groups")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("dpo-demo", help="fit a two-response tabular policy to synthetic preferences")
    p.add_argument("--pairs", type=int, default=10000)
    p.add_argument("--share", type=float, default=0.75)
    p.add_argument("--beta-temp", type=float, default=1.0)
    p.add_argument("--pairs-out")
    p.add_argument("--out")
    p.set_defaults(func=cmd_dpo_demo)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, ParseError, HazrankError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BrokenPipeError:
        # downstream reader (e.g. head) closed early; silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
