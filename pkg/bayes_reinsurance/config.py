from __future__ import annotations

import json
import logging
import math
import pathlib
from dataclasses import dataclass, field
from typing import Optional, Tuple

import jsonschema
import numpy
from jsonschema.exceptions import best_match

from .distributions import ClaimMixture, get_claim_family, get_jump_law
from .errors import (
    InvalidClaimFamily,
    InvalidConfig,
    InvalidFilterState,
    InvalidGridSpec,
    InvalidJumpLaw,
    InvalidModelParams,
)
from .filter import PriorSpec
from .hjb_bayes import GridSpec
from .market import ModelParams, check_admissible

logger = logging.getLogger(__name__)

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_COUNT = {"type": "integer", "minimum": 1}

_TABULATED_POINTS = {
    "type": "array",
    "minItems": 2,
    "items": {
        "type": "array",
        "minItems": 2,
        "maxItems": 2,
        "items": _NUMBER,
    },
}

_DENSITY_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"type": "string", "enum": ["exponential", "tabulated"]},
        "rate": _POSITIVE,
        "points": _TABULATED_POINTS,
        "file": {"type": "string"},
        "normalize": {"type": "boolean"},
    },
    "additionalProperties": False,
}

_GOLDEN_POINT = {
    "type": "object",
    "required": ["threshold", "xi", "xi_tol"],
    "properties": {
        "threshold": _POSITIVE,
        "xi": _NUMBER,
        "xi_tol": _POSITIVE,
        "b": _NUMBER,
        "b_tol": _POSITIVE,
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["model", "claims"],
    "properties": {
        "model": {
            "type": "object",
            "required": [
                "r",
                "mu",
                "sigma",
                "intensity",
                "threshold",
                "risk_aversion",
                "horizon",
                "reinsurer_loading",
            ],
            "properties": {
                "r": _NUMBER,
                "mu": _NUMBER,
                "sigma": _POSITIVE,
                "intensity": {"type": "number", "minimum": 0},
                "threshold": {
                    "oneOf": [_POSITIVE, {"type": "string", "enum": ["inf"]}]
                },
                "risk_aversion": _POSITIVE,
                "horizon": _POSITIVE,
                "kappa": _POSITIVE,
                "reinsurance_premium_rate": _POSITIVE,
                "reinsurer_loading": _POSITIVE,
                "insurer_loading": _POSITIVE,
                "initial_capital": _NUMBER,
                "investment_cap": _POSITIVE,
            },
            "oneOf": [
                {"required": ["kappa"]},
                {"required": ["reinsurance_premium_rate"]},
            ],
            "additionalProperties": False,
        },
        "jump_law": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"type": "string", "enum": ["uniform", "tabulated"]},
                "points": _TABULATED_POINTS,
                "file": {"type": "string"},
                "normalize": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "claims": {
            "type": "object",
            "required": ["families"],
            "properties": {
                "families": {
                    "type": "array",
                    "minItems": 1,
                    "items": _DENSITY_SCHEMA,
                },
                "stochastically_ordered": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "prior": {
            "type": "object",
            "required": ["probabilities"],
            "properties": {
                "probabilities": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "number", "minimum": 0, "maximum": 1},
                }
            },
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "properties": {
                "thresholds": {
                    "oneOf": [
                        {"type": "array", "minItems": 1, "items": _POSITIVE},
                        {
                            "type": "object",
                            "required": ["start", "stop", "num"],
                            "properties": {
                                "start": _POSITIVE,
                                "stop": _POSITIVE,
                                "num": {"type": "integer", "minimum": 2},
                            },
                            "additionalProperties": False,
                        },
                    ]
                },
                "include": {"type": "array", "items": _POSITIVE},
                "time": {"type": "number", "minimum": 0},
                "zero_crossing": {
                    "type": "object",
                    "required": ["lower", "upper"],
                    "properties": {"lower": _POSITIVE, "upper": _POSITIVE},
                    "additionalProperties": False,
                },
                "golden": {
                    "type": "object",
                    "properties": {
                        "points": {"type": "array", "items": _GOLDEN_POINT},
                        "zero_crossing": {
                            "type": "object",
                            "required": ["value", "tol"],
                            "properties": {
                                "value": _POSITIVE,
                                "tol": _POSITIVE,
                            },
                            "additionalProperties": False,
                        },
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "time_steps": _COUNT,
                "simplex_divisions": _COUNT,
                "scheme": {"type": "string", "enum": ["euler", "exponential"]},
                "residual_tol": _POSITIVE,
                "tolerance": _POSITIVE,
                "quadrature_nodes": {"type": "integer", "minimum": 4},
                "workers": _COUNT,
                "report_grid": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
        "simulation": {
            "type": "object",
            "properties": {
                "n_paths": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer", "minimum": 0},
                "steps_per_year": _COUNT,
                "batch_size": {"type": "integer", "minimum": 2},
                "antithetic": {"type": "boolean"},
                "workers": _COUNT,
            },
            "additionalProperties": False,
        },
        "output_dir": {"type": "string"},
    },
    "additionalProperties": False,
}

# ModelParams field -> key of the "model" block
_MODEL_KEYS = {
    "r": "r",
    "mu": "mu",
    "sigma": "sigma",
    "intensity": "intensity",
    "threshold": "threshold",
    "alpha": "risk_aversion",
    "horizon": "horizon",
    "kappa": "kappa",
    "eta": "insurer_loading",
    "theta": "reinsurer_loading",
    "x0": "initial_capital",
    "cap": "investment_cap",
}


@dataclass(frozen=True)
class GoldenPoint(object):
    threshold: float
    xi: float
    xi_tol: float
    b: Optional[float] = None
    b_tol: Optional[float] = None


@dataclass(frozen=True)
class SweepConfig(object):
    """Thresholds of the complete-information sweep and optional golden
    values."""

    thresholds: Tuple[float, ...] = ()
    time: float = 0.0
    zero_crossing: Optional[Tuple[float, float]] = None
    golden_points: Tuple[GoldenPoint, ...] = ()
    golden_crossing: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class SimulationConfig(object):
    n_paths: int = 100000
    seed: int = 0
    steps_per_year: int = 500
    batch_size: int = 10000
    antithetic: bool = False
    workers: int = 1


@dataclass(frozen=True)
class RunConfig(object):
    """A parsed and validated run configuration."""

    path: Optional[pathlib.Path]
    params: ModelParams
    mixture: ClaimMixture
    prior: PriorSpec
    sweep: SweepConfig = field(default_factory=SweepConfig)
    solver: GridSpec = field(default_factory=GridSpec)
    report_grid: int = 9
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    output_dir: pathlib.Path = pathlib.Path("out")

    @property
    def family(self):
        """The single claim law of a complete-information run."""

        if self.mixture.m != 1:
            raise InvalidConfig(
                "a complete-information run needs exactly one claim family, "
                "got {}".format(self.mixture.m),
                path=self.path,
            )
        return self.mixture[0]


def _line_of(text, keys):
    """Line of the last string key of ``keys`` in the raw JSON text,
    following the nesting of the earlier keys.

    A list index ``k`` followed by a key selects the ``k + 1``-th
    occurrence of that key.
    """

    if text is None:
        return None
    position, found, skip = 0, None, 0
    for key in keys:
        if not isinstance(key, str):
            skip = int(key)
            continue
        index = text.find('"{}"'.format(key), position)
        for _ in range(skip):
            if index < 0:
                break
            index = text.find('"{}"'.format(key), index + 1)
        skip = 0
        if index < 0:
            break
        position = found = index
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


class _Context(object):
    def __init__(self, path, text):
        self.path = path
        self.text = text

    def error(self, message, keys=()):
        return InvalidConfig(
            message, path=self.path, lineno=_line_of(self.text, keys)
        )


def _resolve(spec, base):
    if "file" in spec and base is not None:
        spec = dict(spec)
        spec["file"] = str((base / spec["file"]).resolve())
    return spec


def _build_params(block, jump_law, ctx):
    threshold = block["threshold"]
    kw = dict(
        r=block["r"],
        mu=block["mu"],
        sigma=block["sigma"],
        intensity=block["intensity"],
        threshold=math.inf if threshold == "inf" else threshold,
        alpha=block["risk_aversion"],
        horizon=block["horizon"],
        x0=block.get("initial_capital", 0.0),
        cap=block.get("investment_cap"),
        jump_law=jump_law,
    )
    theta = block["reinsurer_loading"]
    eta = block.get("insurer_loading")
    try:
        if "kappa" in block:
            return ModelParams(
                kappa=block["kappa"],
                theta=theta,
                eta=theta / 2.0 if eta is None else eta,
                **kw
            )
        return ModelParams.from_reinsurance_price(
            block["reinsurance_premium_rate"], theta, eta=eta, **kw
        )
    except InvalidModelParams as err:
        key = _MODEL_KEYS.get(err.field, err.field)
        raise ctx.error(str(err), ("model", key)) from err


def _build_thresholds(block):
    spec = block.get("thresholds")
    if spec is None:
        values = []
    elif isinstance(spec, list):
        values = list(spec)
    else:
        values = numpy.logspace(
            math.log10(spec["start"]), math.log10(spec["stop"]), spec["num"]
        ).tolist()
    values.extend(block.get("include", []))
    return tuple(sorted(set(float(v) for v in values)))


def _build_sweep(block, ctx):
    crossing = block.get("zero_crossing")
    if crossing is not None and not crossing["lower"] < crossing["upper"]:
        raise ctx.error(
            "zero_crossing needs lower < upper", ("sweep", "zero_crossing")
        )
    golden = block.get("golden", {})
    golden_crossing = golden.get("zero_crossing")
    return SweepConfig(
        thresholds=_build_thresholds(block),
        time=block.get("time", 0.0),
        zero_crossing=(
            None
            if crossing is None
            else (crossing["lower"], crossing["upper"])
        ),
        golden_points=tuple(
            GoldenPoint(**point) for point in golden.get("points", [])
        ),
        golden_crossing=(
            None
            if golden_crossing is None
            else (golden_crossing["value"], golden_crossing["tol"])
        ),
    )


def parse_config(document, path=None, text=None):
    """Validate a configuration mapping and build a :class:`RunConfig`.

    Parameters
    ----------
    document : dict
        The decoded JSON document.
    path : path-like, optional
        File the document came from; relative CSV paths and the output
        directory resolve against its directory.
    text : str, optional
        Raw file contents, used to anchor errors to lines.

    Raises
    ------
    InvalidConfig
    """

    path = None if path is None else pathlib.Path(path)
    base = None if path is None else path.resolve().parent
    ctx = _Context(path, text)

    error = best_match(
        jsonschema.Draft7Validator(CONFIG_SCHEMA).iter_errors(document)
    )
    if error is not None:
        keys = list(error.absolute_path)
        location = "/".join(str(k) for k in keys) or "<root>"
        raise ctx.error("{}: {}".format(location, error.message), keys)

    try:
        jump_law = get_jump_law(
            _resolve(document.get("jump_law", {"kind": "uniform"}), base)
        )
    except InvalidJumpLaw as err:
        raise ctx.error(str(err), ("jump_law",)) from err
    params = _build_params(document["model"], jump_law, ctx)

    claims = document["claims"]
    try:
        mixture = ClaimMixture(
            [get_claim_family(_resolve(s, base)) for s in claims["families"]],
            stochastically_ordered=claims.get("stochastically_ordered", False),
        )
    except InvalidClaimFamily as err:
        raise ctx.error(str(err), ("claims", "families")) from err
    try:
        check_admissible(params, mixture)
    except InvalidModelParams as err:
        raise ctx.error(str(err), ("model", "risk_aversion")) from err

    try:
        if "prior" in document:
            prior = PriorSpec(document["prior"]["probabilities"])
            if prior.m != mixture.m:
                raise InvalidFilterState(
                    "prior has {} entries but {} claim families are "
                    "defined".format(prior.m, mixture.m)
                )
        else:
            prior = PriorSpec.uniform(mixture.m)
    except InvalidFilterState as err:
        raise ctx.error(str(err), ("prior", "probabilities")) from err

    solver = dict(document.get("solver", {}))
    report_grid = solver.pop("report_grid", 9)
    try:
        grid_spec = GridSpec(**solver)
    except InvalidGridSpec as err:
        raise ctx.error(str(err), ("solver",)) from err

    simulation = SimulationConfig(**document.get("simulation", {}))
    if simulation.antithetic and (
        simulation.n_paths % 2 or simulation.batch_size % 2
    ):
        raise ctx.error(
            "antithetic sampling needs even n_paths and batch_size",
            ("simulation", "antithetic"),
        )

    output_dir = pathlib.Path(document.get("output_dir", "out"))
    if base is not None and not output_dir.is_absolute():
        output_dir = base / output_dir

    return RunConfig(
        path=path,
        params=params,
        mixture=mixture,
        prior=prior,
        sweep=_build_sweep(document.get("sweep", {}), ctx),
        solver=grid_spec,
        report_grid=report_grid,
        simulation=simulation,
        output_dir=output_dir,
    )


def load_config(path):
    """Read, validate and convert a JSON run configuration.

    Errors name the file and, where possible, the offending line.
    """

    path = pathlib.Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise InvalidConfig(
            "cannot read config: {}".format(err), path=path
        ) from err
    try:
        document = json.loads(text)
    except json.JSONDecodeError as err:
        raise InvalidConfig(err.msg, path=path, lineno=err.lineno) from err
    config = parse_config(document, path=path, text=text)
    logger.debug(
        "Loaded config {} with {} claim families".format(
            path, config.mixture.m
        )
    )
    return config
