"""Experiment configuration files.

The config is a single YAML document (plain JSON is valid YAML and works
too).  Schema, version 1:

    version: 1                      # required
    seed: 7                         # default 0
    num_blocks: 1000                # blocks per realised chain, default 1000
    standard_blocks:                # either this ...
      gamma: 1.0
      monomer_probability: 0.5
    blocks:                         # ... or an explicit library
      - resonators:
          - {v: 1.0, ell: 2.0, s: 2.0, gamma: 1.0}
    probabilities: [0.5, 0.5]       # required with explicit blocks
    spectrum:
      lambda_min: -0.5              # defaults -0.5 / 4.0 / 801
      lambda_max: 4.0
      lambda_count: 801
      modes: false                  # eigenvector CSV export (large files)
    lyapunov_grid:
      re_min: -0.5
      re_max: 4.0
      re_count: 96
      im_min: -1.5
      im_max: 1.5
      im_count: 64
      theta_samples: 256
    envelope:
      lambda_cut: 1.5
      gammas: [0.001, 0.011]
      probabilities: [[0.0, 1.0], [0.5, 0.5]]   # default: library probabilities
    critical_gamma:
      lambda_cut: 1.5
      reference_gamma: 0.001
      num_seeds: 4
      exact: false
    dos_convergence:
      num_blocks_list: [100, 1000]
      seeds: [1, 2, 3, 4]
    winding:
      theta_samples: 256

Validation failures raise ConfigError with the offending field path.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .chains import Block, BlockLibrary, ResonatorParams, standard_blocks

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "config_hash"]

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; the message carries the field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _require(mapping, key, path):
    if key not in mapping:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return mapping[key]


def _number(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, "expected a number")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}")
    return float(value)


def _integer(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, "expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}")
    return int(value)


def _mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigError(path, "expected a mapping")
    return value


def _sequence(value, path, min_len=1):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(path, "expected a list")
    if len(value) < min_len:
        raise ConfigError(path, f"needs at least {min_len} entries")
    return list(value)


def _parse_library(raw: dict) -> BlockLibrary:
    if "standard_blocks" in raw and "blocks" in raw:
        raise ConfigError("blocks", "give either standard_blocks or blocks, not both")
    if "standard_blocks" in raw:
        sb = _mapping(raw["standard_blocks"], "standard_blocks")
        gamma = _number(_require(sb, "gamma", "standard_blocks"), "standard_blocks.gamma")
        p = _number(sb.get("monomer_probability", 0.5), "standard_blocks.monomer_probability")
        if not 0.0 <= p <= 1.0:
            raise ConfigError("standard_blocks.monomer_probability", "must be in [0, 1]")
        return standard_blocks(gamma, monomer_probability=p)
    if "blocks" not in raw:
        raise ConfigError("blocks", "missing; give blocks or standard_blocks")
    blocks = []
    for bi, braw in enumerate(_sequence(raw["blocks"], "blocks")):
        bpath = f"blocks[{bi}]"
        braw = _mapping(braw, bpath)
        resonators = []
        for ri, rraw in enumerate(_sequence(_require(braw, "resonators", bpath), f"{bpath}.resonators")):
            rpath = f"{bpath}.resonators[{ri}]"
            rraw = _mapping(rraw, rpath)
            try:
                resonators.append(ResonatorParams(
                    v=_number(_require(rraw, "v", rpath), f"{rpath}.v"),
                    ell=_number(_require(rraw, "ell", rpath), f"{rpath}.ell"),
                    s=_number(_require(rraw, "s", rpath), f"{rpath}.s"),
                    gamma=_number(_require(rraw, "gamma", rpath), f"{rpath}.gamma"),
                ))
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(rpath, str(exc)) from exc
        blocks.append(Block(tuple(resonators)))
    probs = [
        _number(p, f"probabilities[{i}]", minimum=0.0)
        for i, p in enumerate(_sequence(_require(raw, "probabilities", ""), "probabilities"))
    ]
    if len(probs) != len(blocks):
        raise ConfigError("probabilities", "length must match the number of blocks")
    try:
        return BlockLibrary(tuple(blocks), tuple(probs))
    except ValueError as exc:
        raise ConfigError("probabilities", str(exc)) from exc


@dataclass(frozen=True)
class ExperimentConfig:
    library: BlockLibrary
    seed: int = 0
    num_blocks: int = 1000
    spectrum: dict = field(default_factory=dict)
    lyapunov_grid: dict = field(default_factory=dict)
    envelope: dict = field(default_factory=dict)
    critical_gamma: dict = field(default_factory=dict)
    dos_convergence: dict = field(default_factory=dict)
    winding: dict = field(default_factory=dict)


_SPECTRUM_DEFAULTS = {"lambda_min": -0.5, "lambda_max": 4.0, "lambda_count": 801, "modes": False}
_GRID_DEFAULTS = {
    "re_min": -0.5, "re_max": 4.0, "re_count": 96,
    "im_min": -1.5, "im_max": 1.5, "im_count": 64,
    "theta_samples": 256,
}
_ENVELOPE_DEFAULTS = {"lambda_cut": 1.5, "gammas": None, "probabilities": None}
_CRITICAL_DEFAULTS = {"lambda_cut": 1.5, "reference_gamma": 1e-3, "num_seeds": 4, "exact": False}
_DOS_DEFAULTS = {"num_blocks_list": [100, 1000], "seeds": [1, 2, 3, 4]}
_WINDING_DEFAULTS = {"theta_samples": 256}


def _section(raw, name, defaults):
    out = dict(defaults)
    sec = _mapping(raw.get(name, {}), name)
    for key, value in sec.items():
        if key not in defaults:
            raise ConfigError(f"{name}.{key}", "unknown field")
        out[key] = value
    return out


def _validate_sections(cfg: dict) -> dict:
    spectrum = _section(cfg, "spectrum", _SPECTRUM_DEFAULTS)
    spectrum["lambda_min"] = _number(spectrum["lambda_min"], "spectrum.lambda_min")
    spectrum["lambda_max"] = _number(spectrum["lambda_max"], "spectrum.lambda_max")
    spectrum["lambda_count"] = _integer(spectrum["lambda_count"], "spectrum.lambda_count", 2)
    if not isinstance(spectrum["modes"], bool):
        raise ConfigError("spectrum.modes", "expected a boolean")

    grid = _section(cfg, "lyapunov_grid", _GRID_DEFAULTS)
    for key in ("re_min", "re_max", "im_min", "im_max"):
        grid[key] = _number(grid[key], f"lyapunov_grid.{key}")
    for key in ("re_count", "im_count"):
        grid[key] = _integer(grid[key], f"lyapunov_grid.{key}", 8)
    grid["theta_samples"] = _integer(grid["theta_samples"], "lyapunov_grid.theta_samples", 16)

    env = _section(cfg, "envelope", _ENVELOPE_DEFAULTS)
    env["lambda_cut"] = _number(env["lambda_cut"], "envelope.lambda_cut")
    if env["gammas"] is not None:
        env["gammas"] = [
            _number(g, f"envelope.gammas[{i}]")
            for i, g in enumerate(_sequence(env["gammas"], "envelope.gammas"))
        ]
    if env["probabilities"] is not None:
        env["probabilities"] = [
            [_number(p, f"envelope.probabilities[{i}][{j}]", 0.0) for j, p in
             enumerate(_sequence(row, f"envelope.probabilities[{i}]"))]
            for i, row in enumerate(_sequence(env["probabilities"], "envelope.probabilities"))
        ]

    crit = _section(cfg, "critical_gamma", _CRITICAL_DEFAULTS)
    crit["lambda_cut"] = _number(crit["lambda_cut"], "critical_gamma.lambda_cut")
    crit["reference_gamma"] = _number(crit["reference_gamma"], "critical_gamma.reference_gamma", 0.0)
    crit["num_seeds"] = _integer(crit["num_seeds"], "critical_gamma.num_seeds", 1)
    if not isinstance(crit["exact"], bool):
        raise ConfigError("critical_gamma.exact", "expected a boolean")

    dos = _section(cfg, "dos_convergence", _DOS_DEFAULTS)
    dos["num_blocks_list"] = [
        _integer(m, f"dos_convergence.num_blocks_list[{i}]", 1)
        for i, m in enumerate(_sequence(dos["num_blocks_list"], "dos_convergence.num_blocks_list", 2))
    ]
    dos["seeds"] = [
        _integer(s, f"dos_convergence.seeds[{i}]")
        for i, s in enumerate(_sequence(dos["seeds"], "dos_convergence.seeds", 2))
    ]

    winding = _section(cfg, "winding", _WINDING_DEFAULTS)
    winding["theta_samples"] = _integer(winding["theta_samples"], "winding.theta_samples", 16)

    return {
        "spectrum": spectrum,
        "lyapunov_grid": grid,
        "envelope": env,
        "critical_gamma": crit,
        "dos_convergence": dos,
        "winding": winding,
    }


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a config file; raises ConfigError on any problem."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(str(path), "config file not found") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"not valid YAML: {exc}") from exc
    raw = _mapping(raw, "<document>")
    version = _integer(_require(raw, "version", "<document>"), "version")
    if version != CONFIG_VERSION:
        raise ConfigError("version", f"unsupported version {version} (expected {CONFIG_VERSION})")
    known = {
        "version", "seed", "num_blocks", "standard_blocks", "blocks", "probabilities",
        "spectrum", "lyapunov_grid", "envelope", "critical_gamma", "dos_convergence", "winding",
    }
    for key in raw:
        if key not in known:
            raise ConfigError(key, "unknown field")
    library = _parse_library(raw)
    sections = _validate_sections(raw)
    return ExperimentConfig(
        library=library,
        seed=_integer(raw.get("seed", 0), "seed"),
        num_blocks=_integer(raw.get("num_blocks", 1000), "num_blocks", 1),
        **sections,
    )


def config_hash(path: str | Path) -> str:
    """SHA-256 of the raw config bytes, recorded in run manifests."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
