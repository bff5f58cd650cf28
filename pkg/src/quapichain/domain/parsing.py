"""Load a JSON run file into validated domain models.

Typical flow::

    config = load_config(Path("rabi.json"))
    model, bath, run = config.model, config.bath, config.run

Schema errors surface as pydantic ``ValidationError`` (dotted field paths
such as ``bath.beta``); model rules that need the whole chain, such as the
open boundary coupler, surface as ``ValueError``.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from quapichain.domain.models import BathModel, RunConfig, RunParams, SystemModel
from quapichain.domain.weights import validate_model

logger = logging.getLogger(__name__)


def read_config_json(path: Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top level must be an object")
    return data


def config_from_dict(data: dict[str, Any]) -> RunConfig:
    """Validate a run-file mapping, including the chain-wide model rules."""
    config = RunConfig.model_validate(data)
    problems = validate_model(config.model)
    if problems:
        raise ValueError("invalid model: " + "; ".join(problems))
    # mixed Δm chains are rejected here rather than at the first step
    config.bath.uniform_delta_m()
    if config.run.initial_state.states and len(config.run.initial_state.states) != (
        config.model.n_sites
    ):
        raise ValueError(
            f"run.initial_state lists {len(config.run.initial_state.states)} spinors "
            f"for {config.model.n_sites} sites"
        )
    return config


def load_config(path: Path) -> RunConfig:
    config = config_from_dict(read_config_json(path))
    logger.debug("Loaded %s (fingerprint %s)", path, config.fingerprint()[:12])
    return config


def parse_config(path: Path) -> tuple[SystemModel, BathModel, RunParams]:
    """The model, bath and run sections of a run file."""
    config = load_config(path)
    return config.model, config.bath, config.run


def format_validation_error(exc: ValidationError) -> list[str]:
    """One ``dotted.path: message`` line per pydantic error."""
    lines = []
    for err in exc.errors():
        where = ".".join(str(part) for part in err["loc"]) or "<root>"
        lines.append(f"{where}: {err['msg']}")
    return lines
