"""Configuration management for mutsched campaigns."""

import json
import logging
from typing import Any, Dict, FrozenSet, Optional, Tuple

from .analysis import ALL_ORACLES, Oracle, parse_oracles
from .exceptions import ConfigurationError
from .model import Semantics
from .mutation import ALL_OPERATORS, DeltaConfig, MutationOperator, parse_operator_set

logger = logging.getLogger(__name__)

CAMPAIGN_SCHEMA = "mutsched-campaign/1"
BASELINES = ("same", "zero-time", "time-aware")
SEMANTICS_CHOICES = ("time-aware", "zero-time", "both")

_KEYS = {"schema", "deltas", "operators", "oracles", "baseline", "semantics",
         "horizon", "workers", "mrsm_position"}


class Config:
    """Effective campaign settings shared by the command-line tools."""

    def __init__(self):
        self.timing_deltas: Tuple[int, ...] = (1, 2, 3)
        self.priority_deltas: Tuple[int, ...] = (1, 2, 3)
        self.operators: Tuple[MutationOperator, ...] = ALL_OPERATORS
        self.oracles: FrozenSet[Oracle] = ALL_ORACLES
        self.baseline: str = "same"
        self.semantics: Optional[str] = None  # None: the model's own setting
        self.horizon: Optional[int] = None
        self.workers: int = 1
        self.mrsm_position: str = "first"

    def configure(self, **overrides: Any) -> None:
        """
        Apply setting overrides; keys left out or set to None keep their value.

        Args:
            timing_deltas: δ values of the offset, period, execution-time
                and jitter classes
            priority_deltas: δ values of the priority class
            operators: Operators, or an operator selection string
            oracles: Oracles, or a comma-separated oracle list
            baseline: "same", "zero-time" or "time-aware"
            semantics: "time-aware", "zero-time" or "both"
            horizon: Ticks to simulate
            workers: Processes simulating mutants
            mrsm_position: "first" or "last" runnable receives mRSM reads

        Raises:
            ConfigurationError: On an unknown setting
        """
        for key, value in overrides.items():
            if value is None:
                continue
            if not hasattr(self, key) or key.startswith("_"):
                raise ConfigurationError(f"unknown setting: {key}")
            if key == "operators" and isinstance(value, str):
                value = parse_operator_set(value)
            elif key == "oracles" and isinstance(value, str):
                value = parse_oracles(value)
            elif key in ("timing_deltas", "priority_deltas", "operators"):
                value = tuple(value)
            elif key == "oracles":
                value = frozenset(value)
            setattr(self, key, value)

    def validate(self) -> None:
        """Validate the settings."""
        for name in ("timing_deltas", "priority_deltas"):
            values = getattr(self, name)
            if not values or any(not isinstance(v, int) or isinstance(v, bool) or v <= 0 for v in values):
                raise ConfigurationError(f"{name} must be a non-empty list of positive integers")
        if self.baseline not in BASELINES:
            raise ConfigurationError(f"baseline must be one of {', '.join(BASELINES)}")
        if self.semantics is not None and self.semantics not in SEMANTICS_CHOICES:
            raise ConfigurationError(f"semantics must be one of {', '.join(SEMANTICS_CHOICES)}")
        if self.horizon is not None and self.horizon <= 0:
            raise ConfigurationError("horizon must be positive")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if not self.oracles:
            raise ConfigurationError("at least one oracle is required")
        if self.mrsm_position not in ("first", "last"):
            raise ConfigurationError("mrsm_position must be 'first' or 'last'")

    def delta_config(self) -> DeltaConfig:
        self.validate()
        return DeltaConfig.from_lists(self.timing_deltas, self.priority_deltas, self.mrsm_position)

    def semantics_list(self, model_semantics: Semantics) -> Tuple[Semantics, ...]:
        if self.semantics == "both":
            return (Semantics.ZERO_TIME, Semantics.TIME_AWARE)
        if self.semantics is None:
            return (model_semantics,)
        return (Semantics(self.semantics),)


def _int_list(value: Any, path: str) -> Tuple[int, ...]:
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise ConfigurationError(f"{path}: expected a list of integers")
    return tuple(value)


def parse_campaign(text: str) -> Dict[str, Any]:
    """
    Parse a campaign document into Config.configure keyword arguments.

    Raises:
        ConfigurationError: On malformed JSON, a wrong schema or bad fields
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"line {e.lineno}, column {e.colno}: {e.msg}")
    if not isinstance(doc, dict):
        raise ConfigurationError("campaign document must be a JSON object")
    if doc.get("schema") != CAMPAIGN_SCHEMA:
        raise ConfigurationError(f"schema: expected {CAMPAIGN_SCHEMA!r}")
    unknown = sorted(set(doc) - _KEYS)
    if unknown:
        raise ConfigurationError(f"unknown campaign keys: {', '.join(unknown)}")

    settings: Dict[str, Any] = {}
    deltas = doc.get("deltas", {})
    if not isinstance(deltas, dict):
        raise ConfigurationError("deltas: expected an object")
    if "timing" in deltas:
        settings["timing_deltas"] = _int_list(deltas["timing"], "deltas.timing")
    if "priority" in deltas:
        settings["priority_deltas"] = _int_list(deltas["priority"], "deltas.priority")
    if "operators" in doc:
        ops = doc["operators"]
        if isinstance(ops, list):
            ops = ",".join(map(str, ops))
        settings["operators"] = parse_operator_set(str(ops))
    if "oracles" in doc:
        oracles = doc["oracles"]
        try:
            settings["oracles"] = frozenset(Oracle(o) for o in oracles)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"oracles: {e}")
    for key in ("baseline", "semantics", "mrsm_position"):
        if key in doc:
            settings[key] = doc[key]
    for key in ("horizon", "workers"):
        if doc.get(key) is not None:
            if not isinstance(doc[key], int) or isinstance(doc[key], bool):
                raise ConfigurationError(f"{key}: expected an integer")
            settings[key] = doc[key]
    return settings


# Global config instance
_config = Config()


def get_config() -> Config:
    """Get the global configuration instance."""
    return _config


def reset_config() -> Config:
    """Replace the global configuration with defaults and return it."""
    global _config
    _config = Config()
    return _config
