"""Experiment pipeline: simulate, split, fit, predict, score.

Everything here is driven by a single validated config dict so that runs
are reproducible from one artifact; the CLI is a thin wrapper. All
randomness is derived from the config's root seed plus stage tags.
"""

from __future__ import annotations

import copy
import json
import zlib

import numpy as np

from .covariance import CovarianceModel, GammaField, ModelKind
from .data import Dataset, random_split, region_split
from .errors import ConfigError
from .inference import Chain, make_log_posterior, model_from_raw, posterior_predictive, run_mcmc, PARAM_NAMES
from .scoring import score_record
from .simulate import GridSpec, latlon_grid, sample_gp
from .vecchia import build_plan, joint_predictive_samples

SCHEMA_VERSION = 1

SECTION_5_MODELS = {
    "isotropic": {
        "beta1": [-0.5, 0.0, 0.0],
        "beta2": [-0.5, 0.0, 0.0],
        "kappa": 0.0,
        "kind": "isotropic",
    },
    "axially_symmetric": {
        "beta1": [-0.5, 0.0, 1.44],
        "beta2": [-3.2, 0.0, 1.44],
        "kappa": 0.0,
        "kind": "axially_symmetric",
    },
    "general": {
        "beta1": [-0.5, -1.2, 1.44],
        "beta2": [-3.2, -0.3, 1.44],
        "kappa": 0.8,
        "kind": "general",
    },
}

DEFAULT_CONFIG = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "out_dir": "out",
    "data": None,
    "degrees": False,
    "grid": {"n_lon": 50, "n_lat": 50},
    "true_model": {"kind": "isotropic"},
    "assumed_kind": "isotropic",
    "split": {
        "scheme": "random",
        "frac": 0.2,
        "n_regions": 10,
        "lon_width": 0.4,
        "lat_width": 0.2,
        "target_frac": 0.2,
    },
    "vecchia_m": 10,
    "mcmc": {
        "n_iter": 5000,
        "burn_in": 1000,
        "thin": 1,
        "target_accept": 0.234,
        "initial_scale": 0.1,
        "max_retained": 500,
        "prior_sd": 10.0,
        "init": None,
    },
    "fit_nugget": None,
    "score": {"energy_draws": 200},
    "experiment": {
        "replicates": 5,
        "true_kinds": ["isotropic", "axially_symmetric", "general"],
        "assumed_kinds": ["isotropic", "axially_symmetric", "general"],
        "split_schemes": ["random"],
    },
}

PRESETS = {
    "desk": {"grid": {"n_lon": 20, "n_lat": 20}, "mcmc": {"n_iter": 500, "burn_in": 100}},
    "paper": {"grid": {"n_lon": 50, "n_lat": 50}, "mcmc": {"n_iter": 5000, "burn_in": 1000}},
}


# sections whose inner keys are validated by their own constructor
OPEN_SECTIONS = ("true_model",)


def _merge(base: dict, override: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {where}")
        if key in OPEN_SECTIONS and not path and isinstance(val, dict):
            merged = dict(base[key])
            merged.update(val)
            out[key] = merged
        elif isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(obj: dict | None = None, preset: str | None = None, **overrides) -> dict:
    """Fill defaults, apply a preset, and apply flag overrides, validating keys."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if obj:
        cfg = _merge(cfg, obj)
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        cfg = _merge(cfg, PRESETS[preset])
    flat = {k: v for k, v in overrides.items() if v is not None}
    if flat:
        cfg = _merge(cfg, flat)
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {cfg['schema_version']}")
    for kind_key in ("assumed_kind",):
        try:
            ModelKind(cfg[kind_key])
        except ValueError:
            raise ConfigError(f"{kind_key} must be one of {[k.value for k in ModelKind]}")
    try:
        ModelKind(cfg["true_model"].get("kind", "general"))
    except ValueError:
        raise ConfigError("true_model.kind is invalid")
    if cfg["split"]["scheme"] not in ("random", "region"):
        raise ConfigError("split.scheme must be 'random' or 'region'")
    if cfg["mcmc"]["burn_in"] >= cfg["mcmc"]["n_iter"]:
        raise ConfigError("mcmc.burn_in must be smaller than mcmc.n_iter")
    if cfg["vecchia_m"] < 1:
        raise ConfigError("vecchia_m must be at least 1")
    for k in cfg["experiment"]["true_kinds"] + cfg["experiment"]["assumed_kinds"]:
        try:
            ModelKind(k)
        except ValueError:
            raise ConfigError(f"experiment kinds contain invalid entry {k!r}")
    for s in cfg["experiment"]["split_schemes"]:
        if s not in ("random", "region"):
            raise ConfigError(f"experiment split scheme {s!r} invalid")


def derive_rng(root_seed, *tags) -> np.random.Generator:
    """Deterministic generator for a pipeline stage, keyed by tags."""
    ints = [int(root_seed) & 0xFFFFFFFF] + [zlib.crc32(str(t).encode()) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(ints))


def true_model_from_config(cfg: dict) -> CovarianceModel:
    """Covariance model for data generation; §-style defaults per kind."""
    tm = dict(cfg["true_model"])
    kind = tm.pop("kind", "general")
    spec = dict(SECTION_5_MODELS[ModelKind(kind).value])
    spec.pop("kind")
    allowed = {"beta1", "beta2", "kappa", "sigma", "nu", "nugget"}
    unknown = set(tm) - allowed
    if unknown:
        raise ConfigError(f"unknown true_model keys: {sorted(unknown)}")
    spec.update(tm)
    spec.setdefault("sigma", 1.0)
    spec.setdefault("nu", 0.5)
    spec.setdefault("nugget", 0.0)
    return CovarianceModel(
        GammaField(*spec["beta1"]),
        GammaField(*spec["beta2"]),
        float(spec["kappa"]),
        float(spec["sigma"]),
        float(spec["nu"]),
        float(spec["nugget"]),
        ModelKind(kind),
    )


def model_to_dict(model: CovarianceModel) -> dict:
    return json.loads(model.to_json())


def simulate_dataset(cfg: dict, rng=None) -> tuple[Dataset, CovarianceModel]:
    """Grid + exact GP draw under the configured true model."""
    model = true_model_from_config(cfg)
    grid = latlon_grid(GridSpec(cfg["grid"]["n_lon"], cfg["grid"]["n_lat"]))
    if rng is None:
        rng = derive_rng(cfg["seed"], "simulate")
    values = sample_gp(model, grid, rng)
    return Dataset(grid, values, {"model": model_to_dict(model)}), model


def split_dataset(cfg: dict, dataset: Dataset, rng=None):
    sp = cfg["split"]
    if rng is None:
        rng = derive_rng(cfg["seed"], "split", sp["scheme"])
    if sp["scheme"] == "random":
        return random_split(dataset, sp["frac"], rng)
    return region_split(
        dataset,
        n_regions=sp["n_regions"],
        lon_width=sp["lon_width"],
        lat_width=sp["lat_width"],
        target_frac=sp["target_frac"],
        seed=rng,
    )


def fit_nugget(cfg: dict, sigma: float) -> float:
    if cfg["fit_nugget"] is not None:
        return float(cfg["fit_nugget"])
    return 1e-8 * sigma**2


def fit_chain(cfg: dict, train: Dataset, *, kind=None, rng=None) -> Chain:
    """Run the adaptive MCMC fit over the configured assumed kind."""
    kind = ModelKind(kind or cfg["assumed_kind"])
    mc = cfg["mcmc"]
    tm = cfg["true_model"]
    sigma = float(tm.get("sigma", 1.0))
    nu = float(tm.get("nu", 0.5))
    plan = build_plan(train.locs, cfg["vecchia_m"])
    target = make_log_posterior(
        train.locs,
        train.values,
        plan,
        kind,
        sigma=sigma,
        nu=nu,
        nugget=fit_nugget(cfg, sigma),
        prior_sd=mc["prior_sd"],
    )
    init = mc["init"] if mc["init"] is not None else np.zeros(kind.n_free)
    if rng is None:
        rng = derive_rng(cfg["seed"], "mcmc", kind.value)
    return run_mcmc(
        target,
        init,
        mc["n_iter"],
        rng,
        target_accept=mc["target_accept"],
        initial_scale=mc["initial_scale"],
        param_names=PARAM_NAMES[kind],
    )


def predict_mixtures(cfg: dict, train: Dataset, test: Dataset, chain: Chain, *, kind=None):
    kind = ModelKind(kind or cfg["assumed_kind"])
    mc = cfg["mcmc"]
    tm = cfg["true_model"]
    sigma = float(tm.get("sigma", 1.0))
    nu = float(tm.get("nu", 0.5))
    return posterior_predictive(
        chain,
        mc["burn_in"],
        mc["thin"],
        kind,
        train.locs,
        train.values,
        test.locs,
        cfg["vecchia_m"],
        sigma=sigma,
        nu=nu,
        nugget=fit_nugget(cfg, sigma),
        max_draws=mc["max_retained"],
    )


def joint_energy_samples(cfg: dict, train: Dataset, test: Dataset, chain: Chain, *, kind=None, rng=None):
    """Joint predictive draws for the energy score, one posterior draw each."""
    kind = ModelKind(kind or cfg["assumed_kind"])
    mc = cfg["mcmc"]
    tm = cfg["true_model"]
    sigma = float(tm.get("sigma", 1.0))
    nu = float(tm.get("nu", 0.5))
    nug = fit_nugget(cfg, sigma)
    kept = chain.retained(mc["burn_in"], mc["thin"], mc["max_retained"])
    n_draws = int(cfg["score"]["energy_draws"])
    if rng is None:
        rng = derive_rng(cfg["seed"], "energy", kind.value)
    assign = rng.integers(0, len(kept), size=n_draws)
    out = np.empty((n_draws, test.n))
    for k in np.unique(assign):
        rows = np.where(assign == k)[0]
        model = model_from_raw(kept[k], kind, sigma=sigma, nu=nu, nugget=nug)
        out[rows] = joint_predictive_samples(
            model, train.locs, train.values, test.locs, cfg["vecchia_m"], rng, len(rows)
        )
    return out


def score_cell(cfg: dict, train: Dataset, test: Dataset, chain: Chain, *, kind=None, rng=None):
    """Predict at the test locations; returns (score record, mixtures)."""
    mixtures = predict_mixtures(cfg, train, test, chain, kind=kind)
    samples = joint_energy_samples(cfg, train, test, chain, kind=kind, rng=rng)
    return score_record(mixtures, test.values, samples, cfg["seed"]), mixtures


def run_cell(cfg: dict, true_kind: str, assumed_kind: str, scheme: str, replicate: int) -> dict:
    """One experiment cell: simulate, split, fit, predict, score."""
    cell_cfg = copy.deepcopy(cfg)
    # keep observation-level settings, reset shape parameters to the
    # generating defaults of the requested kind
    kept = {k: v for k, v in cfg["true_model"].items() if k in ("sigma", "nu", "nugget")}
    cell_cfg["true_model"] = {"kind": true_kind, **kept}
    cell_cfg["assumed_kind"] = assumed_kind
    cell_cfg["split"]["scheme"] = scheme

    sim_rng = derive_rng(cfg["seed"], "simulate", true_kind, replicate)
    dataset, _ = simulate_dataset(cell_cfg, sim_rng)
    split_rng = derive_rng(cfg["seed"], "split", true_kind, scheme, replicate)
    train, test, _, _ = split_dataset(cell_cfg, dataset, split_rng)
    mcmc_rng = derive_rng(cfg["seed"], "mcmc", true_kind, assumed_kind, scheme, replicate)
    chain = fit_chain(cell_cfg, train, rng=mcmc_rng)
    energy_rng = derive_rng(cfg["seed"], "energy", true_kind, assumed_kind, scheme, replicate)
    record, _ = score_cell(cell_cfg, train, test, chain, rng=energy_rng)
    return {
        "schema_version": SCHEMA_VERSION,
        "true_kind": true_kind,
        "assumed_kind": assumed_kind,
        "split": scheme,
        "replicate": replicate,
        "acceptance_rate": chain.acceptance_rate,
        **record,
    }
