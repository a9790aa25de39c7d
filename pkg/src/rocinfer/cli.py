"""Command line front-end: configuration, dispatch, JSON and CSV emission.

Subcommands
    pooled     marker-only ROC (methods: emp, kernel, bb, dpm)
    croc       covariate-specific ROC at newdata rows (sp, kernel, bnp)
    aroc       covariate-adjusted ROC (sp, kernel, bnp)
    threshold  optimal thresholds on top of any approach (--approach)
    simulate   synthetic study CSV

Config files are INI with one section per subcommand and the long flag
names (dashes or underscores) as keys; every flag given on the command
line overrides its file value. Categorical covariates take their levels
in first-appearance order, which drives dummy coding and per-level knot
vectors, so the row order of the data file is part of the input.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .adjusted import aroc_bnp, aroc_frequentist, aroc_threshold
from .conditional import croc_bnp, croc_kernel, croc_sp, croc_threshold
from .errors import ConfigError, RocinferError
from .generate import GeneratorParams, simulate_endosyn_like
from .ingest import ingest_csv, read_newdata
from .mixtures import DdpPrior, DpmPrior, McmcControl
from .pooled import (
    DensityControl,
    PaucControl,
    pooled_bb,
    pooled_dpm,
    pooled_empirical,
    pooled_kernel,
    pooled_threshold,
)
from .sample import FpfGrid

SCHEMA_VERSION = 1

_METHODS = {
    "pooled": ("emp", "kernel", "bb", "dpm"),
    "croc": ("sp", "kernel", "bnp"),
    "aroc": ("sp", "kernel", "bnp"),
}
_DEFAULT_METHOD = {"pooled": "emp", "croc": "sp", "aroc": "sp"}

_APPROACH_LINES = {
    ("pooled", "emp"): "Pooled ROC curve (empirical)",
    ("pooled", "kernel"): "Pooled ROC curve (kernel-smoothed)",
    ("pooled", "bb"): "Pooled ROC curve (Bayesian bootstrap)",
    ("pooled", "dpm"): "Pooled ROC curve (Dirichlet process mixture)",
    ("croc", "sp"): "Covariate-specific ROC curve (induced linear model)",
    ("croc", "kernel"): "Covariate-specific ROC curve (local linear kernel)",
    ("croc", "bnp"): "Covariate-specific ROC curve (dependent mixture)",
    ("aroc", "sp"): "Covariate-adjusted ROC curve (healthy-model placements)",
    ("aroc", "kernel"): "Covariate-adjusted ROC curve (kernel placements)",
    ("aroc", "bnp"): "Covariate-adjusted ROC curve (dependent mixture placements)",
}


@dataclass
class RunConfig:
    """One resolved run; every field mirrors a CLI flag or INI key."""

    subcommand: str
    method: str | None = None
    data: str | None = None
    marker: str | None = None
    group: str | None = None
    tag: str | None = None
    formula_h: str | None = None
    formula_d: str | None = None
    covariate: str | None = None
    newdata: str | None = None
    grid_length: int | None = None
    pauc: bool | None = None
    pauc_focus: str | None = None
    pauc_value: float | None = None
    density: bool | None = None
    density_grid_length: int | None = None
    prior: dict = field(default_factory=dict)
    prior_h: dict = field(default_factory=dict)
    prior_d: dict = field(default_factory=dict)
    nsave: int | None = None
    nburn: int | None = None
    nskip: int | None = None
    B: int | None = None
    bw: str | None = None
    est_cdf: str | None = None
    standardise: bool | None = None
    seed: int = 2026
    workers: int = 1
    out: str | None = None
    curves_csv: str | None = None
    approach: str | None = None
    criterion: str = "yi"
    target_fpf: float | None = None
    n: int | None = None
    params: dict = field(default_factory=dict)

    def family(self) -> str:
        if self.subcommand == "threshold":
            return self.approach or "pooled"
        return self.subcommand

    def resolved_method(self) -> str:
        return self.method or _DEFAULT_METHOD[self.family()]

    def validate(self):
        if self.subcommand == "simulate":
            if not self.out:
                raise ConfigError("simulate needs --out for the CSV")
            return
        for name in ("data", "marker", "group"):
            if not getattr(self, name):
                raise ConfigError("--%s is required for %s" % (name, self.subcommand))
        if self.tag is None:
            raise ConfigError("--tag is required for %s" % self.subcommand)
        fam = self.family()
        if fam not in _METHODS:
            raise ConfigError("approach must be pooled, croc or aroc")
        method = self.resolved_method()
        if method not in _METHODS[fam]:
            raise ConfigError(
                "method %r not valid for %s (choose from %s)" % (method, fam, ", ".join(_METHODS[fam]))
            )
        if fam == "croc":
            if not self.newdata:
                raise ConfigError("croc needs --newdata with the covariate rows to evaluate")
            if method in ("sp", "bnp") and not (self.formula_h and self.formula_d):
                raise ConfigError("croc with method %s needs --formula-h and --formula-d" % method)
            if method == "kernel" and not self.covariate:
                raise ConfigError("croc with the kernel method needs --covariate")
        if fam == "aroc":
            if method in ("sp", "bnp") and not self.formula_h:
                raise ConfigError("aroc needs --formula-h for the healthy regression")
            if method == "kernel" and not self.covariate:
                raise ConfigError("aroc with the kernel method needs --covariate")
        if self.subcommand == "threshold":
            if self.criterion not in ("yi", "fpf"):
                raise ConfigError("criterion must be yi or fpf")
            if self.criterion == "fpf" and self.target_fpf is None:
                raise ConfigError("criterion fpf needs --target-fpf")
            if fam == "aroc":
                if method != "bnp":
                    raise ConfigError("adjusted thresholds need posterior draws; use --method bnp")
                if not self.newdata:
                    raise ConfigError("adjusted thresholds need --newdata covariate rows")
                if self.criterion == "fpf":
                    raise ConfigError("adjusted thresholds support only the yi criterion")


# -- config assembly ----------------------------------------------------------

_INT_KEYS = ("grid_length", "density_grid_length", "nsave", "nburn", "nskip", "B", "seed", "workers", "n")
_FLOAT_KEYS = ("pauc_value", "target_fpf")
_BOOL_KEYS = ("pauc", "density", "standardise")
_DICT_KEYS = ("prior", "prior_h", "prior_d", "params")


def _pairs(text_or_list) -> dict:
    """Parse 'k=v' items (a list of them, or one comma-joined string)."""
    items = text_or_list if isinstance(text_or_list, list) else [
        part for part in str(text_or_list).split(",") if part.strip()
    ]
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError("expected key=value, got %r" % item)
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _ini_section(path: str, section: str) -> dict:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep key case (the B flag)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError("cannot read config file %s: %s" % (path, exc)) from None
    except configparser.Error as exc:
        raise ConfigError("bad config file %s: %s" % (path, exc)) from None
    if section not in parser:
        return {}
    valid = {f.name for f in dataclasses.fields(RunConfig)} - {"subcommand"}
    folded = {v.lower(): v for v in valid}
    out = {}
    for key, value in parser[section].items():
        name = key.strip().replace("-", "_")
        if name not in valid:
            name = folded.get(name.lower())
            if name is None:
                raise ConfigError("unknown key %r in [%s] of %s" % (key, section, path))
        out[name] = value
    return out


def _coerce(name: str, value):
    if not isinstance(value, str):
        return value
    try:
        if name in _INT_KEYS:
            return int(value)
        if name in _FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise ConfigError("key %r needs a number, got %r" % (name, value)) from None
    if name in _BOOL_KEYS:
        low = value.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError("key %r needs a boolean, got %r" % (name, value))
    if name in _DICT_KEYS:
        return _pairs(value)
    return value


def _merge_config(subcommand: str, args: argparse.Namespace) -> RunConfig:
    ini = _ini_section(args.config, subcommand) if getattr(args, "config", None) else {}
    cfg = RunConfig(subcommand=subcommand)
    for f in dataclasses.fields(RunConfig):
        if f.name == "subcommand":
            continue
        cli_val = getattr(args, f.name, None)
        if f.name in _DICT_KEYS:
            merged = dict(_coerce(f.name, ini[f.name])) if f.name in ini else {}
            if cli_val:
                merged.update(_pairs(cli_val))
            setattr(cfg, f.name, merged)
            continue
        if cli_val is not None:
            setattr(cfg, f.name, cli_val)
        elif f.name in ini:
            setattr(cfg, f.name, _coerce(f.name, ini[f.name]))
    cfg.validate()
    return cfg


def _add_common(sp: argparse.ArgumentParser):
    sp.add_argument("--config", help="INI file; section [%s]" % sp.prog.split()[-1])
    sp.add_argument("--data", help="study CSV path")
    sp.add_argument("--marker", help="marker column name")
    sp.add_argument("--group", help="disease label column name")
    sp.add_argument("--tag", help="label of the nondiseased group (text match)")
    sp.add_argument("--method", help="estimator")
    sp.add_argument("--formula-h", dest="formula_h", help="healthy regression formula")
    sp.add_argument("--formula-d", dest="formula_d", help="diseased regression formula")
    sp.add_argument("--covariate", help="covariate column for kernel methods")
    sp.add_argument("--newdata", help="CSV of covariate rows to evaluate at")
    sp.add_argument("--grid-length", dest="grid_length", type=int, help="FPF grid length (default 101)")
    sp.add_argument("--pauc", action=argparse.BooleanOptionalAction, default=None,
                    help="compute a partial area")
    sp.add_argument("--pauc-focus", dest="pauc_focus", choices=("fpf", "tpf"))
    sp.add_argument("--pauc-value", dest="pauc_value", type=float,
                    help="FPF upper bound or TPF lower bound")
    sp.add_argument("--density", action=argparse.BooleanOptionalAction, default=None,
                    help="emit posterior marker densities (dpm/bnp)")
    sp.add_argument("--density-grid-length", dest="density_grid_length", type=int)
    sp.add_argument("--prior", action="append", metavar="KEY=VALUE",
                    help="prior override for both groups (repeatable)")
    sp.add_argument("--prior-h", dest="prior_h", action="append", metavar="KEY=VALUE")
    sp.add_argument("--prior-d", dest="prior_d", action="append", metavar="KEY=VALUE")
    sp.add_argument("--nsave", type=int, help="posterior draws kept")
    sp.add_argument("--nburn", type=int, help="burn-in sweeps")
    sp.add_argument("--nskip", type=int, help="thinning interval")
    sp.add_argument("--B", type=int, help="bootstrap replicates (or Bayesian bootstrap draws)")
    sp.add_argument("--bw", choices=("srt", "lscv"), help="bandwidth rule for kernel methods")
    sp.add_argument("--est-cdf", dest="est_cdf", choices=("normal", "empirical"),
                    help="residual CDF model for sp methods")
    sp.add_argument("--standardise", action=argparse.BooleanOptionalAction, default=None,
                    help="standardise the marker before Bayesian fits (default on)")
    sp.add_argument("--seed", type=int, help="RNG seed (default 2026)")
    sp.add_argument("--workers", type=int, help="thread pool size (results do not depend on it)")
    sp.add_argument("--out", help="write the result envelope JSON here")
    sp.add_argument("--curves-csv", dest="curves_csv", help="also write tidy curve rows (row,p,est,lo,hi)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rocinfer",
        description="ROC curve inference: pooled, covariate-specific, and covariate-adjusted.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in ("pooled", "croc", "aroc"):
        _add_common(sub.add_parser(name))
    thr = sub.add_parser("threshold")
    _add_common(thr)
    thr.add_argument("--approach", choices=("pooled", "croc", "aroc"),
                     help="which fitted curve the threshold sits on (default pooled)")
    thr.add_argument("--criterion", choices=("yi", "fpf"), default=None,
                     help="maximise the Youden index, or fix the FPF")
    thr.add_argument("--target-fpf", dest="target_fpf", type=float)
    sim = sub.add_parser("simulate")
    sim.add_argument("--config", help="INI file; section [simulate]")
    sim.add_argument("--n", type=int, help="rows to generate (default 2840)")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--param", dest="params", action="append", metavar="KEY=VALUE",
                     help="generator constant override (repeatable)")
    sim.add_argument("--out", help="CSV output path")
    return parser


# -- estimator dispatch -------------------------------------------------------

def _prior_pooled(overrides: dict) -> DpmPrior | None:
    if not overrides:
        return None
    fields = {f.name for f in dataclasses.fields(DpmPrior)}
    kwargs = {}
    for key, val in overrides.items():
        if key not in fields:
            raise ConfigError("unknown prior field %r (DpmPrior has %s)" % (key, ", ".join(sorted(fields))))
        kwargs[key] = int(val) if key == "L" else float(val)
    return DpmPrior(**kwargs)


def _prior_ddp(overrides: dict) -> DdpPrior | None:
    """Vector field m0 takes comma floats; S0/Psi take a comma diagonal."""
    if not overrides:
        return None
    fields = {f.name for f in dataclasses.fields(DdpPrior)}
    kwargs = {}
    for key, val in overrides.items():
        if key not in fields:
            raise ConfigError("unknown prior field %r (DdpPrior has %s)" % (key, ", ".join(sorted(fields))))
        if key == "L":
            kwargs[key] = int(val)
        elif key in ("m0", "S0", "Psi"):
            parts = [float(x) for x in str(val).split(";") if x.strip()] if ";" in str(val) \
                else [float(x) for x in str(val).split(",") if x.strip()]
            kwargs[key] = np.array(parts) if key == "m0" else np.diag(parts)
        else:
            kwargs[key] = float(val)
    return DdpPrior(**kwargs)


def _mcmc_of(cfg: RunConfig) -> McmcControl | None:
    if cfg.nsave is None and cfg.nburn is None and cfg.nskip is None:
        return None
    return McmcControl(
        nsave=cfg.nsave if cfg.nsave is not None else 8000,
        nburn=cfg.nburn if cfg.nburn is not None else 2000,
        nskip=cfg.nskip if cfg.nskip is not None else 1,
    )


def _pauc_of(cfg: RunConfig) -> PaucControl:
    compute = cfg.pauc if cfg.pauc is not None else (
        cfg.pauc_focus is not None or cfg.pauc_value is not None
    )
    return PaucControl(
        compute=bool(compute),
        focus=cfg.pauc_focus or "fpf",
        value=cfg.pauc_value if cfg.pauc_value is not None else 1.0,
    )


def _density_of(cfg: RunConfig) -> DensityControl:
    return DensityControl(
        compute=bool(cfg.density),
        grid_length=cfg.density_grid_length or 200,
    )


def _grid(cfg: RunConfig):
    return FpfGrid.default(cfg.grid_length).p if cfg.grid_length else None


def _dispatch(cfg: RunConfig):
    """Run the configured estimator; returns (sample, fit result)."""
    fam = cfg.family()
    method = cfg.resolved_method()
    covs = [] if fam == "pooled" else None  # pooled reads marker and group only
    sample = ingest_csv(cfg.data, cfg.marker, cfg.group, cfg.tag, covariates=covs)
    p = _grid(cfg)
    pauc = _pauc_of(cfg)
    std = True if cfg.standardise is None else bool(cfg.standardise)
    B = cfg.B if cfg.B is not None else 500

    if fam == "pooled":
        if method == "emp":
            res = pooled_empirical(sample, p=p, pauc=pauc, B=B, rng=cfg.seed, workers=cfg.workers)
        elif method == "kernel":
            res = pooled_kernel(sample, p=p, bw=cfg.bw or "srt", pauc=pauc, B=B,
                                rng=cfg.seed, workers=cfg.workers)
        elif method == "bb":
            res = pooled_bb(sample, p=p, S=cfg.B if cfg.B is not None else 1000,
                            pauc=pauc, rng=cfg.seed)
        else:
            res = pooled_dpm(sample, p=p, prior_h=_prior_pooled({**cfg.prior, **cfg.prior_h}),
                             prior_d=_prior_pooled({**cfg.prior, **cfg.prior_d}),
                             mcmc=_mcmc_of(cfg), pauc=pauc, density=_density_of(cfg),
                             rng=cfg.seed, standardise_marker=std, workers=cfg.workers)
        return sample, res

    if fam == "croc":
        newdata = read_newdata(cfg.newdata)
        if method == "sp":
            res = croc_sp(cfg.formula_h, cfg.formula_d, sample, newdata,
                          est_cdf=cfg.est_cdf or "normal", p=p, pauc=pauc, B=B,
                          rng=cfg.seed, workers=cfg.workers)
        elif method == "kernel":
            res = croc_kernel(sample, cfg.covariate, newdata, bw=cfg.bw or "lscv",
                              p=p, pauc=pauc, B=B, rng=cfg.seed, workers=cfg.workers)
        else:
            res = croc_bnp(cfg.formula_h, cfg.formula_d, sample, newdata,
                           prior_h=_prior_ddp({**cfg.prior, **cfg.prior_h}),
                           prior_d=_prior_ddp({**cfg.prior, **cfg.prior_d}),
                           mcmc=_mcmc_of(cfg), p=p, pauc=pauc, density=_density_of(cfg),
                           rng=cfg.seed, standardise_marker=std, workers=cfg.workers)
        return sample, res

    if method == "sp":
        variant = "sp_empirical" if cfg.est_cdf == "empirical" else "sp_normal"
        res = aroc_frequentist(sample, formula=cfg.formula_h, variant=variant,
                               p=p, pauc=pauc, B=B, rng=cfg.seed, workers=cfg.workers)
    elif method == "kernel":
        res = aroc_frequentist(sample, covariate=cfg.covariate, variant="kernel",
                               p=p, pauc=pauc, B=B, rng=cfg.seed, workers=cfg.workers)
    else:
        res = aroc_bnp(sample, cfg.formula_h, prior=_prior_ddp({**cfg.prior, **cfg.prior_h}),
                       mcmc=_mcmc_of(cfg), p=p, pauc=pauc, rng=cfg.seed,
                       standardise_marker=std, workers=cfg.workers)
    return sample, res


def _threshold_of(cfg: RunConfig, fit):
    """Returns (ThresholdResult, covariate frame the rows refer to or None)."""
    fam = cfg.family()
    if fam == "pooled":
        return pooled_threshold(fit, criterion=cfg.criterion, target_fpf=cfg.target_fpf), None
    if fam == "croc":
        return croc_threshold(fit, criterion=cfg.criterion, target_fpf=cfg.target_fpf), fit.newdata
    frame = read_newdata(cfg.newdata)
    return aroc_threshold(fit, frame), frame


# -- serialisation ------------------------------------------------------------

def _jsonable(x):
    """JSON-safe copy: arrays to lists, NaN and infinities to null."""
    if hasattr(x, "as_dict"):
        return _jsonable(x.as_dict())
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else None
    if isinstance(x, (int, np.integer)):
        return int(x)
    return x


def _frame_echo(frame) -> dict:
    return {name: col.values.tolist() for name, col in frame.columns.items()}


def _payload_of(cfg: RunConfig, sample, fit, thr=None, thr_frame=None) -> dict:
    fam = cfg.family()
    out = {
        "kind": cfg.subcommand,
        "approach": fam,
        "method": fit.method,
        "sample_sizes": {
            "healthy": int(fit.sample_sizes[0]),
            "diseased": int(fit.sample_sizes[1]),
            "dropped_missing": int(sample.missing),
        },
    }
    if thr is not None:
        out["criterion"] = thr.criterion
        if thr.target_fpf is not None:
            out["target_fpf"] = thr.target_fpf
        if thr_frame is not None:
            out["newdata"] = _frame_echo(thr_frame)
        out["threshold"] = thr.threshold
        out["fpf"] = thr.fpf
        out["tpf"] = thr.tpf
        if thr.yi is not None:
            out["yi"] = thr.yi
        if thr.sign is not None:
            out["sign"] = thr.sign
        return out

    out["p"] = fit.p
    if fam == "pooled":
        out["roc"] = {"est": fit.roc_est, "lo": fit.roc_lo, "hi": fit.roc_hi}
        out["auc"] = fit.auc
    elif fam == "croc":
        out["newdata"] = _frame_echo(fit.newdata)
        out["roc"] = {"est": fit.roc_est, "lo": fit.roc_lo, "hi": fit.roc_hi}
        out["auc"] = fit.auc
        if fit.coefficients is not None:
            out["coefficients"] = fit.coefficients
    else:
        out["roc"] = {"est": fit.aroc_est, "lo": fit.aroc_lo, "hi": fit.aroc_hi}
        out["aauc"] = fit.aauc
        out["yi"] = fit.yi
        out["p_star"] = fit.p_star
        out["placements"] = fit.placements
    if fit.pauc is not None:
        out["pauc"] = fit.pauc
    if getattr(fit, "densities", None) is not None:
        out["densities"] = fit.densities
    if fit.fit is not None:
        out["fit"] = fit.fit
    return out


# -- text summary -------------------------------------------------------------

def _fmt(iv) -> str:
    d = iv.as_dict() if hasattr(iv, "as_dict") else iv
    return "%.3f (%.3f, %.3f)" % (d["est"], d["lo"], d["hi"])


def _pauc_label(d: dict) -> str:
    if d["focus"] == "fpf":
        return "pAUC (FPF in [0, %.3f], normalised)" % d["bound"]
    return "pAUC (TPF in [%.3f, 1], normalised)" % d["bound"]


def _row_label(frame, r: int) -> str:
    parts = []
    for name, col in frame.columns.items():
        v = col.values[r]
        parts.append("%s=%g" % (name, v) if not col.is_categorical else "%s=%s" % (name, v))
    return ", ".join(parts)


def _criteria_lines(fit_block) -> list:
    d = fit_block.as_dict()
    groups = [g for g in ("healthy", "diseased") if g in d]
    rows = [("WAIC", "waic"), ("WAIC penalty", "waic_penalty"), ("DIC", "dic"),
            ("DIC penalty", "dic_penalty"), ("LPML", "lpml")]
    lines = ["Model selection criteria:"]
    lines.append("  %-14s" % "" + "".join("%14s" % g for g in groups))
    for label, key in rows:
        lines.append("  %-14s" % label + "".join("%14.3f" % d[g][key] for g in groups))
    return lines


def _summary_lines(cfg: RunConfig, sample, fit, thr=None, thr_frame=None) -> list:
    fam = cfg.family()
    lines = ["Approach: " + _APPROACH_LINES[(fam, cfg.resolved_method())]]
    if thr is not None:
        if thr.criterion == "yi":
            lines.append("Criterion: Youden index maximum")
        else:
            lines.append("Criterion: fixed FPF %.3f" % thr.target_fpf)
        for r in range(len(thr.threshold)):
            tag = "  row %d (%s): " % (r, _row_label(thr_frame, r)) if thr_frame is not None else "  "
            piece = "threshold %s, FPF %s, TPF %s" % (
                _fmt(thr.threshold[r]), _fmt(thr.fpf[r]), _fmt(thr.tpf[r]))
            if thr.yi is not None:
                piece += ", YI %s" % _fmt(thr.yi[r])
            lines.append(tag + piece)
    elif fam == "pooled":
        lines.append("AUC: " + _fmt(fit.auc))
        if fit.pauc is not None:
            lines.append("%s: %s" % (_pauc_label(fit.pauc.as_dict()), _fmt(fit.pauc)))
    elif fam == "croc":
        show = min(fit.newdata.n, 12)
        for r in range(show):
            line = "AUC at row %d (%s): %s" % (r, _row_label(fit.newdata, r), _fmt(fit.auc[r]))
            if fit.pauc is not None:
                line += "; %s: %s" % (_pauc_label(fit.pauc[r].as_dict()), _fmt(fit.pauc[r]))
            lines.append(line)
        if fit.newdata.n > show:
            lines.append("  ... %d further rows in the JSON payload" % (fit.newdata.n - show))
    else:
        lines.append("AAUC: " + _fmt(fit.aauc))
        if fit.pauc is not None:
            lines.append("%s: %s" % (_pauc_label(fit.pauc.as_dict()), _fmt(fit.pauc)))
        lines.append("Youden index: %s at FPF %s" % (_fmt(fit.yi), _fmt(fit.p_star)))
    if thr is None and fit.fit is not None:
        lines.extend(_criteria_lines(fit.fit))
    lines.append("Sample sizes: healthy %d, diseased %d (dropped %d rows with missing values)"
                 % (fit.sample_sizes[0], fit.sample_sizes[1], sample.missing))
    return lines


def _write_curves_csv(path: str, cfg: RunConfig, fit):
    fam = cfg.family()
    rows = ["row,p,est,lo,hi"]
    if fam == "croc":
        for r in range(fit.roc_est.shape[0]):
            for j, pj in enumerate(fit.p):
                rows.append("%d,%.10g,%.10g,%.10g,%.10g"
                            % (r, pj, fit.roc_est[r, j], fit.roc_lo[r, j], fit.roc_hi[r, j]))
    else:
        est = fit.roc_est if fam == "pooled" else fit.aroc_est
        lo = fit.roc_lo if fam == "pooled" else fit.aroc_lo
        hi = fit.roc_hi if fam == "pooled" else fit.aroc_hi
        for j, pj in enumerate(fit.p):
            rows.append("0,%.10g,%.10g,%.10g,%.10g" % (pj, est[j], lo[j], hi[j]))
    with open(path, "wb") as fh:
        fh.write(("\n".join(rows) + "\n").encode("utf-8"))


# -- envelope and entry points ------------------------------------------------

@dataclass
class ResultEnvelope:
    schema_version: int
    config: dict
    timing: dict
    warnings: list
    payload: dict

    def as_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "timing": self.timing,
            "warnings": self.warnings,
            "payload": self.payload,
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.as_dict()), indent=2, allow_nan=False)


def run(cfg: RunConfig, echo: bool = True) -> ResultEnvelope:
    """Fit, package, and emit one configured analysis."""
    cfg.validate()
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sample, fit = _dispatch(cfg)
        thr, thr_frame = _threshold_of(cfg, fit) if cfg.subcommand == "threshold" else (None, None)
    elapsed = time.perf_counter() - start
    notes = sorted({str(w.message) for w in caught})
    if cfg.curves_csv and cfg.subcommand == "threshold":
        notes.append("curves CSV skipped: threshold results carry no curve")
    envelope = ResultEnvelope(
        schema_version=SCHEMA_VERSION,
        config=_jsonable(dataclasses.asdict(cfg)),
        timing={"seconds": elapsed},
        warnings=notes,
        payload=_jsonable(_payload_of(cfg, sample, fit, thr, thr_frame)),
    )
    if cfg.out:
        with open(cfg.out, "wb") as fh:
            fh.write((envelope.to_json() + "\n").encode("utf-8"))
    if cfg.curves_csv and cfg.subcommand != "threshold":
        _write_curves_csv(cfg.curves_csv, cfg, fit)
    if echo:
        print("\n".join(_summary_lines(cfg, sample, fit, thr, thr_frame)))
    return envelope


def _run_simulate(cfg: RunConfig):
    params = None
    if cfg.params:
        fields = {f.name: f for f in dataclasses.fields(GeneratorParams)}
        kwargs = {}
        for key, val in cfg.params.items():
            if key not in fields:
                raise ConfigError("unknown generator field %r" % key)
            kwargs[key] = float(val)
        params = GeneratorParams(**kwargs)
    n = cfg.n if cfg.n is not None else 2840
    text = simulate_endosyn_like(n, cfg.seed, params)
    with open(cfg.out, "wb") as fh:
        fh.write(text.encode("utf-8"))
    print("wrote %d rows to %s" % (n, cfg.out))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args.subcommand, args)
        if cfg.subcommand == "simulate":
            _run_simulate(cfg)
        else:
            run(cfg)
    except RocinferError as exc:
        print("rocinfer: %s" % exc, file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
