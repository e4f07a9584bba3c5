"""Experiment configuration and its INI file format.

A config file has an ``[experiment]`` section, a ``[noise]`` section, a
``[volatility]`` section and, for experiments involving a dependence
matrix, a ``[dependence]`` section.  List values are comma separated.
Unknown sections or keys are errors.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

from ..model import DependenceMatrix, band_k, make_band_matrix, make_perturbed_band_matrix
from ..normalization import dimension_rule
from ..sampling import (
    DegenerateVolatility,
    MixingVolatility,
    NoiseSpec,
    ThinnedVolatility,
    VolatilitySpec,
)

EXPERIMENTS = (
    "diag-approx",
    "point-process",
    "frechet-top",
    "trace-tail",
    "fmatrix-eigen",
    "eigenvector-loc",
    "thinned-diag",
    "thinned-pp",
    "ld-ratio",
)
NEEDS_DEPENDENCE = ("fmatrix-eigen", "eigenvector-loc")
NEEDS_THINNING = ("thinned-diag", "thinned-pp")
DEFAULT_SEED = 20170815


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DependenceRecipe:
    """Band matrix (optionally perturbed on a few rows), rebuilt for each dimension ``p``."""

    bandwidth: int = 1
    diag_value: float = 2.0
    offdiag: tuple = (0.5,)
    num_dense_rows: int = 0
    perturb_seed: int = 0

    def build(self, p: int) -> DependenceMatrix:
        bandwidth = min(self.bandwidth, p - 1)
        A = make_band_matrix(p, bandwidth, self.diag_value, self.offdiag)
        if self.num_dense_rows:
            A = make_perturbed_band_matrix(A, min(self.num_dense_rows, p), self.perturb_seed)
        return A


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    vol: VolatilitySpec = field(default_factory=DegenerateVolatility)
    beta: float = 0.7
    ell_const: float = 1.0
    n_grid: tuple = (500, 1000, 2000, 4000)
    replications: int = 50
    top_k: int = 2
    thresholds: tuple = (0.5, 1.0, 2.0, 4.0)
    band_k_rule: str = "p^{1/4}"
    master_seed: int = DEFAULT_SEED
    output_path: str = "records.csv"
    dependence: Optional[DependenceRecipe] = None
    ld_epsilon: float = 0.1
    ld_samples: int = 100_000
    moment_samples: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "thresholds", tuple(float(x) for x in self.thresholds))
        self.validate()

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid must be a non-empty list of positive integers")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError(f"n_grid must be strictly ascending, got {self.n_grid}")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not 0 < self.beta <= 1:
            raise ConfigError(f"beta must lie in (0, 1], got {self.beta}")
        if not self.ell_const > 0:
            raise ConfigError("ell_const must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        if any(x <= 0 for x in self.thresholds):
            raise ConfigError("thresholds must be positive")
        try:
            band_k(4, self.band_k_rule)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.experiment in NEEDS_THINNING and not isinstance(self.vol, ThinnedVolatility):
            raise ConfigError(f"{self.experiment} requires thinned volatility")
        if self.experiment in NEEDS_DEPENDENCE:
            if self.dependence is None:
                raise ConfigError(f"{self.experiment} requires a [dependence] section")
            if self.top_k < 1:
                raise ConfigError("top_k must be at least 1")
            for n in self.n_grid:
                p = dimension_rule(n, self.beta, self.ell_const)
                if self.experiment == "eigenvector-loc" and self.top_k > p:
                    raise ConfigError(f"top_k={self.top_k} exceeds p={p} at n={n}")
        if self.experiment == "ld-ratio" and (self.ld_samples < 1 or not self.ld_epsilon > 0):
            raise ConfigError("ld-ratio requires ld_samples >= 1 and ld_epsilon > 0")

    def warnings(self) -> list:
        """Non-fatal concerns, e.g. a thinning rate too slow for the point-process limit."""
        out = []
        vol = self.vol
        if self.experiment == "thinned-pp" and isinstance(vol, ThinnedVolatility) and vol.exponent < 1:
            n = self.n_grid[-1]
            p = dimension_rule(n, self.beta, self.ell_const)
            for j, q in enumerate(vol.probabilities(n)[1:], start=1):
                value = p * math.exp(-n * q)
                if value > 1e-2:
                    out.append(
                        f"level {j}: p*exp(-n*q_j) = {value:.3g} at n={n}; the point-process limit "
                        "needs p*exp(-c*n*q_j) -> 0 for each c>0"
                    )
        if isinstance(vol, ThinnedVolatility) and vol.exponent == 0:
            out.append("thinning exponent 0 keeps P(sigma = 0) fixed; the thinned limit theory does not apply")
        return out


_EXPERIMENT_KEYS = {
    "name": str,
    "beta": float,
    "ell_const": float,
    "n_grid": "ints",
    "replications": int,
    "top_k": int,
    "thresholds": "floats",
    "band_k_rule": str,
    "master_seed": int,
    "output_path": str,
    "ld_epsilon": float,
    "ld_samples": int,
    "moment_samples": int,
}
_NOISE_KEYS = {"family": str, "alpha": float, "q_plus": float, "q_minus": float, "scale": float}
_VOL_KEYS = {
    "degenerate": {"value": float},
    "bounded-mixing": {"bound_M": float, "rho_time": float, "rho_row": float, "transform": str},
    "thinned": {"levels": "floats", "coefficients": "floats", "exponent": float},
}
_DEP_KEYS = {"bandwidth": int, "diag_value": float, "offdiag": "floats", "num_dense_rows": int, "perturb_seed": int}


def _convert(section: str, key: str, raw: str, kind):
    try:
        if kind == "ints":
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if kind == "floats":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if kind is int:
            return int(raw, 0)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None


def _read_section(parser, section: str, schema: dict) -> dict:
    out = {}
    for key, raw in parser.items(section):
        if key not in schema:
            raise ConfigError(f"[{section}] unknown key {key!r}")
        out[key] = _convert(section, key, raw.strip(), schema[key])
    return out


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    allowed = {"experiment", "noise", "volatility", "dependence"}
    unknown = set(parser.sections()) - allowed
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    if not parser.has_section("experiment"):
        raise ConfigError("missing [experiment] section")
    exp = _read_section(parser, "experiment", _EXPERIMENT_KEYS)
    if "name" not in exp:
        raise ConfigError("[experiment] needs a name")
    kwargs = {k: v for k, v in exp.items() if k != "name"}
    try:
        if parser.has_section("noise"):
            kwargs["noise"] = NoiseSpec(**_read_section(parser, "noise", _NOISE_KEYS))
        if parser.has_section("volatility"):
            items = dict(parser.items("volatility"))
            variant = items.pop("variant", "degenerate").strip()
            if variant not in _VOL_KEYS:
                raise ConfigError(f"[volatility] unknown variant {variant!r}")
            schema = dict(_VOL_KEYS[variant], variant=str)
            values = _read_section(parser, "volatility", schema)
            values.pop("variant", None)
            cls = {"degenerate": DegenerateVolatility, "bounded-mixing": MixingVolatility,
                   "thinned": ThinnedVolatility}[variant]
            kwargs["vol"] = cls(**values)
        if parser.has_section("dependence"):
            kwargs["dependence"] = DependenceRecipe(**_read_section(parser, "dependence", _DEP_KEYS))
        return ExperimentConfig(experiment=exp["name"], **kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config`."""
    if callable(getattr(config.vol, "transform", None)):
        raise ConfigError("a callable volatility transform cannot be written to a config file")
    lines = ["[experiment]", f"name = {config.experiment}"]
    for key in _EXPERIMENT_KEYS:
        if key != "name":
            lines.append(f"{key} = {_fmt(getattr(config, key))}")
    lines += ["", "[noise]"]
    lines += [f"{f.name} = {_fmt(getattr(config.noise, f.name))}" for f in dataclasses.fields(config.noise)]
    lines += ["", "[volatility]", f"variant = {config.vol.variant}"]
    lines += [f"{f.name} = {_fmt(getattr(config.vol, f.name))}" for f in dataclasses.fields(config.vol)]
    if config.dependence is not None:
        lines += ["", "[dependence]"]
        lines += [f"{f.name} = {_fmt(getattr(config.dependence, f.name))}"
                  for f in dataclasses.fields(config.dependence)]
    return "\n".join(lines) + "\n"
