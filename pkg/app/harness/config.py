"""Experiment configuration: TOML files validated into a Scenario."""

import hashlib
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from app.errors import ConfigError
from app.models.base import TorusGrid
from app.models.scenario import Scenario

logger = logging.getLogger(__name__)

SECTIONS = ("grid", "constants", "scenario", "sweep")


def scenario_from_mapping(data: dict[str, Any]) -> Scenario:
    """Flatten [grid], [constants], [scenario] and [sweep] into a Scenario."""
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    fields: dict[str, Any] = {}
    if "grid" in data:
        fields["grid"] = data["grid"]
    if "constants" in data:
        fields["constants"] = data["constants"]
    for section in ("scenario", "sweep"):
        body = data.get(section, {})
        if not isinstance(body, dict):
            raise ConfigError(f"section [{section}] must be a table")
        for key, value in body.items():
            if key in fields or key in ("grid", "constants"):
                raise ConfigError(f"key '{key}' appears in more than one section")
            fields[key] = value
    try:
        return Scenario.model_validate(fields)
    except ValidationError as e:
        raise ConfigError(f"invalid scenario: {e}") from e


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate an experiment config file."""
    path = Path(path)
    try:
        with path.open("rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config file {path} is not valid TOML: {e}") from e
    scenario = scenario_from_mapping(data)
    logger.info(f"Loaded scenario '{scenario.name}' from {path} (hash {config_hash(scenario)[:12]})")
    return scenario


def config_hash(scenario: Scenario) -> str:
    """SHA-256 of the canonical JSON dump of the validated scenario."""
    canonical = json.dumps(scenario.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


RUN_PARAMETER_KEYS = ("constants", "scheme", "cfl_acoustic", "cfl_advective", "sample_dt")


def run_parameters(scenario: Scenario) -> dict[str, Any]:
    """What a relaxing run needs besides its state: constants, scheme, CFL factors, sampling."""
    dumped = scenario.model_dump(mode="json")
    return {key: dumped[key] for key in RUN_PARAMETER_KEYS}


def scenario_from_run_parameters(params: dict[str, Any], grid: TorusGrid) -> Scenario:
    """Rebuild a Scenario on the given grid from run_parameters output.

    Raises:
        ConfigError: if a key is missing or does not validate
    """
    missing = [key for key in RUN_PARAMETER_KEYS if key not in params]
    if missing:
        raise ConfigError(f"run parameters lack {missing}")
    try:
        return Scenario.model_validate({"grid": grid, **{key: params[key] for key in RUN_PARAMETER_KEYS}})
    except ValidationError as e:
        raise ConfigError(f"invalid run parameters: {e}") from e
