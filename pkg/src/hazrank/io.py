"""CSV dataset files, strict JSON run configuration and provenance helpers.

Utility files have a ``utility`` column followed by feature columns; ranking
files have ``group,rank`` (rank 1 is most preferred) followed by feature
columns; preference files have ``chosen,rejected`` response indices.
Floats are written with ``repr`` so a write/read round trip is bit-exact.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .core import Covariates, HazrankError, RankingInstance, SurvivalDataset
from .optimizer import FitConfig
from .plackett_luce import RankingDataset
from .simulate import (
    Bernoulli,
    ExponentialPH,
    Gaussian,
    LogNormal,
    Mixture,
    SimSpec,
    UniformBox,
    WeibullPH,
)

SEED_ENV = "HAZRANK_SEED"


class ParseError(HazrankError, ValueError):
    pass


class ConfigError(HazrankError, ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key '{key}': {message}")
        self.key = key


# ---------------------------------------------------------------- CSV files


def _fmt(x: float) -> str:
    return repr(float(x))


def write_utility_csv(path, data: SurvivalDataset) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["utility", *data.feature_names])
        for u, row in zip(data.utilities, data.X):
            w.writerow([_fmt(u), *map(_fmt, row)])


def write_ranking_csv(path, data: RankingDataset) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "rank", *data.feature_names])
        for g, inst in enumerate(data.instances):
            rank = np.empty(inst.n_items, dtype=np.int64)
            rank[inst.order] = np.arange(1, inst.n_items + 1)
            for item in range(inst.n_items):
                w.writerow([g, int(rank[item]), *map(_fmt, inst.X[item])])


def write_pairs_csv(path, pairs) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chosen", "rejected"])
        for c, r in pairs:
            w.writerow([int(c), int(r)])


def _read_rows(path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: cannot open ({exc.strerror})") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{line_no}: expected {len(header)} fields, found {len(row)}")
            rows.append((line_no, row))
    if len(set(header)) != len(header):
        raise ParseError(f"{path}:1: duplicate column names in header")
    return header, rows


def _float(path, line_no, column, text) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{path}:{line_no}: column '{column}' is not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ParseError(f"{path}:{line_no}: column '{column}' is not finite: {text!r}")
    return value


def _int(path, line_no, column, text) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{path}:{line_no}: column '{column}' is not an integer: {text!r}") from None


def file_kind(path) -> str:
    header, _ = _read_rows(path)
    return _kind(path, header)


def _kind(path, header) -> str:
    if header[:1] == ["utility"]:
        return "utility"
    if header[:2] == ["group", "rank"]:
        return "ranking"
    if header == ["chosen", "rejected"]:
        return "pairs"
    raise ParseError(f"{path}:1: header must start with 'utility' or 'group,rank', or be 'chosen,rejected'")


def read_dataset(path):
    """Read any supported file; returns a SurvivalDataset, RankingDataset or pair array."""
    header, rows = _read_rows(path)
    kind = _kind(path, header)
    if kind == "pairs":
        return np.array(
            [[_int(path, ln, h, c) for h, c in zip(header, row)] for ln, row in rows], dtype=np.int64
        ).reshape(-1, 2)
    lead = 1 if kind == "utility" else 2
    features = header[lead:]
    if not features:
        raise ParseError(f"{path}:1: no feature columns")
    if not rows:
        raise ParseError(f"{path}: no data rows")
    X = np.array([[_float(path, ln, h, c) for h, c in zip(features, row[lead:])] for ln, row in rows])
    if kind == "utility":
        u = np.array([_float(path, ln, "utility", row[0]) for ln, row in rows])
        for (ln, _), value in zip(rows, u):
            if value <= 0:
                raise ParseError(f"{path}:{ln}: utility must be positive, got {value!r}")
        return SurvivalDataset(X, u, tuple(features))

    groups: dict[int, list[tuple[int, int, int]]] = {}
    for i, (ln, row) in enumerate(rows):
        g = _int(path, ln, "group", row[0])
        r = _int(path, ln, "rank", row[1])
        groups.setdefault(g, []).append((r, i, ln))
    instances = []
    for g, members in groups.items():
        ranks = sorted(r for r, _, _ in members)
        if ranks != list(range(1, len(members) + 1)):
            raise ParseError(
                f"{path}:{members[0][2]}: group {g} has ranks {ranks}, expected 1..{len(members)}"
            )
        if len(members) < 2:
            raise ParseError(f"{path}:{members[0][2]}: group {g} has a single item")
        rows_idx = [i for _, i, _ in members]
        local_rank = [r for r, _, _ in members]
        order = np.argsort(local_rank)
        instances.append(RankingInstance(Covariates(X[rows_idx], tuple(features)), order))
    return RankingDataset(tuple(instances))


# ------------------------------------------------------------ configuration

_SECTIONS = {"simulate", "fit", "diagnose", "figure", "output"}
_SIM_KEYS = {
    "n", "beta_true", "covariates", "law", "seed", "likert_levels", "group_size",
    "sigma_beta", "driver", "alt_weights", "feature_names",
}
_FIT_KEYS = {"model", "ties", "beta_temp", *FitConfig.__dataclass_fields__}
_DIAG_KEYS = {"epsilon", "z_crit", "seeds", "min_n", "group_column"}
_FIGURE_KEYS = {"n", "seed", "groups", "epsilon", "grid_points"}
_OUTPUT_KEYS = {"dir", "data", "report"}

_LAW_KEYS = {
    "weibull": ({"shape"}, {"scale"}),
    "exponential": (set(), {"rate"}),
    "lognormal": (set(), {"mu", "sigma"}),
    "mixture": ({"components"}, set()),
}
_COV_KEYS = {
    "bernoulli": (Bernoulli, {"p"}),
    "uniform": (UniformBox, {"lo", "hi"}),
    "gaussian": (Gaussian, {"mean", "sd"}),
}


def _strict(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(where, f"expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{where}.{key}" if where else key, "unknown key")
    return obj


def parse_law(obj, where="simulate.law"):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(where, "a law needs a 'kind'")
    kind = obj["kind"]
    if kind not in _LAW_KEYS:
        raise ConfigError(f"{where}.kind", f"unknown law {kind!r}; expected one of {sorted(_LAW_KEYS)}")
    required, optional = _LAW_KEYS[kind]
    _strict(obj, {"kind", *required, *optional}, where)
    for key in required:
        if key not in obj:
            raise ConfigError(f"{where}.{key}", "missing")
    try:
        if kind == "weibull":
            return WeibullPH(float(obj["shape"]), float(obj.get("scale", 1.0)))
        if kind == "exponential":
            return ExponentialPH(float(obj.get("rate", 1.0)))
        if kind == "lognormal":
            return LogNormal(float(obj.get("mu", 0.0)), float(obj.get("sigma", 1.0)))
        comps = []
        for k, comp in enumerate(obj["components"]):
            at = f"{where}.components[{k}]"
            _strict(comp, {"weight", "law"}, at)
            comps.append((float(comp["weight"]), parse_law(comp["law"], f"{at}.law")))
        return Mixture(tuple(comps))
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(where, str(exc)) from None


def law_to_dict(law) -> dict:
    if isinstance(law, WeibullPH):
        return {"kind": "weibull", "shape": law.shape, "scale": law.scale}
    if isinstance(law, ExponentialPH):
        return {"kind": "exponential", "rate": law.rate}
    if isinstance(law, LogNormal):
        return {"kind": "lognormal", "mu": law.mu, "sigma": law.sigma}
    return {"kind": "mixture", "components": [{"weight": w, "law": law_to_dict(c)} for w, c in law.components]}


def parse_covariate(obj, where):
    if not isinstance(obj, dict) or obj.get("kind") not in _COV_KEYS:
        raise ConfigError(f"{where}.kind", f"expected one of {sorted(_COV_KEYS)}")
    cls, keys = _COV_KEYS[obj["kind"]]
    _strict(obj, {"kind", *keys}, where)
    try:
        return cls(**{k: float(v) for k, v in obj.items() if k != "kind"})
    except (TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None


def covariate_to_dict(sampler) -> dict:
    kind = {Bernoulli: "bernoulli", UniformBox: "uniform", Gaussian: "gaussian"}[type(sampler)]
    return {"kind": kind, **asdict(sampler)}


def parse_simspec(obj, seed: int | None = None) -> SimSpec:
    where = "simulate"
    _strict(obj, _SIM_KEYS, where)
    for key in ("n", "beta_true", "covariates", "law"):
        if key not in obj:
            raise ConfigError(f"{where}.{key}", "missing")
    law = parse_law(obj["law"])
    covs = obj["covariates"]
    if not isinstance(covs, list):
        raise ConfigError(f"{where}.covariates", "expected a list")
    samplers = tuple(parse_covariate(c, f"{where}.covariates[{k}]") for k, c in enumerate(covs))
    kwargs: dict[str, Any] = {}
    for key in ("likert_levels", "group_size", "driver"):
        if obj.get(key) is not None:
            kwargs[key] = obj[key]
    for key in ("sigma_beta", "alt_weights", "feature_names"):
        if obj.get(key) is not None:
            kwargs[key] = tuple(obj[key])
    resolved_seed = seed if seed is not None else obj.get("seed", default_seed())
    try:
        return SimSpec(
            n=int(obj["n"]),
            beta_true=tuple(obj["beta_true"]),
            covariates=samplers,
            law=law,
            seed=int(resolved_seed),
            **kwargs,
        )
    except HazrankError as exc:
        raise ConfigError(where, str(exc)) from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None


def simspec_to_dict(spec: SimSpec) -> dict:
    out = {
        "n": spec.n,
        "beta_true": list(spec.beta_true),
        "covariates": [covariate_to_dict(c) for c in spec.covariates],
        "law": law_to_dict(spec.law),
        "seed": spec.seed,
        "driver": spec.driver,
    }
    for key in ("likert_levels", "group_size", "sigma_beta", "alt_weights"):
        value = getattr(spec, key)
        if value is not None:
            out[key] = list(value) if isinstance(value, tuple) else value
    if spec.feature_names:
        out["feature_names"] = list(spec.feature_names)
    return out


@dataclass(frozen=True)
class FitSection:
    model: str | None = None
    ties: str = "breslow"
    beta_temp: float = 1.0
    config: FitConfig = FitConfig()


def parse_fit(obj) -> FitSection:
    obj = obj or {}
    _strict(obj, _FIT_KEYS, "fit")
    model = obj.get("model")
    if model is not None and model not in ("cox", "pl", "dpo"):
        raise ConfigError("fit.model", f"expected 'cox', 'pl' or 'dpo', got {model!r}")
    ties = obj.get("ties", "breslow")
    if ties not in ("breslow", "efron"):
        raise ConfigError("fit.ties", f"expected 'breslow' or 'efron', got {ties!r}")
    knobs = {k: obj[k] for k in FitConfig.__dataclass_fields__ if k in obj}
    try:
        config = FitConfig(**knobs)
    except (TypeError, ValueError) as exc:
        raise ConfigError("fit", str(exc)) from None
    beta_temp = float(obj.get("beta_temp", 1.0))
    if not beta_temp > 0:
        raise ConfigError("fit.beta_temp", "must be positive")
    return FitSection(model, ties, beta_temp, config)


DIAGNOSE_DEFAULTS = {"epsilon": 0.01, "z_crit": 2.58, "seeds": 20, "min_n": 200, "group_column": None}


def parse_diagnose(obj) -> dict:
    obj = obj or {}
    _strict(obj, _DIAG_KEYS, "diagnose")
    out = {**DIAGNOSE_DEFAULTS, **obj}
    if not out["epsilon"] >= 0:
        raise ConfigError("diagnose.epsilon", "must be non-negative")
    if not out["z_crit"] > 0:
        raise ConfigError("diagnose.z_crit", "must be positive")
    seeds = out["seeds"]
    out["seeds"] = list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]
    return out


FIGURE_DEFAULTS = {
    "n": 20000,
    "seed": 0,
    "epsilon": 0.01,
    "grid_points": 200,
    "groups": {
        "i": {"law": {"kind": "weibull", "shape": 1.5, "scale": 1.0}, "score": 0.0},
        "j": {"law": {"kind": "weibull", "shape": 1.5, "scale": 1.0}, "score": -1.0},
        "k": {"law": {"kind": "lognormal", "mu": -0.3, "sigma": 1.2}, "score": 0.0},
    },
}


def parse_figure(obj) -> dict:
    obj = obj or {}
    _strict(obj, _FIGURE_KEYS, "figure")
    out = {**FIGURE_DEFAULTS, **obj}
    groups = out["groups"]
    if not isinstance(groups, dict) or len(groups) < 2:
        raise ConfigError("figure.groups", "need at least two named groups")
    parsed = {}
    for name, g in groups.items():
        at = f"figure.groups.{name}"
        _strict(g, {"law", "score"}, at)
        if "law" not in g:
            raise ConfigError(f"{at}.law", "missing")
        parsed[name] = (parse_law(g["law"], f"{at}.law"), float(g.get("score", 0.0)))
    out["groups"] = parsed
    return out


def load_config(path) -> dict:
    """Read and structurally validate a run config; unknown keys raise :class:`ConfigError`."""
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    _strict(doc, _SECTIONS, "")
    if "output" in doc:
        _strict(doc["output"], _OUTPUT_KEYS, "output")
    return doc


def config_hash(doc: dict) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(SEED_ENV, f"not an integer: {raw!r}") from None


def write_json(path, doc) -> None:
    Path(path).write_text(dumps(doc) + "\n", encoding="utf-8")


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")
