"""
Experiment configuration files

A configuration is flat `key = value` text, one assignment per line. `#`
starts a comment and blank lines are ignored:

    # honest qubit run
    d = 2
    n_rounds = 10000
    p_bm = 0.9
    p_cm = 0.9
    p_d = 0.1
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from .adversary import AdversaryStrategy
from .channel import ChannelConfig
from .errors import ConfigError, InvalidArgumentError, UnsupportedStrategyError
from .protocol import ProtocolConfig
from .validation import EXPERIMENT_SCHEMA, ConfigEntry, ConfigValidator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: ProtocolConfig
    channel: ChannelConfig
    adversary: AdversaryStrategy
    seed: int = 0
    trials: int = 1
    output_path: Optional[Path] = None


def read_entries(text: str) -> Dict[str, ConfigEntry]:
    """
    Split configuration text into raw entries keyed by name.

    Raises:
        ConfigError: On a malformed line or a repeated key
    """
    entries: Dict[str, ConfigEntry] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", line=number)
        if not value:
            raise ConfigError(f"{key}: missing value", key=key, line=number)
        if key in entries:
            raise ConfigError(f"{key} repeated (first set on line {entries[key].line})", key=key, line=number)
        entries[key] = ConfigEntry(value=value, line=number)
    return entries


def build_config(entries: Mapping[str, ConfigEntry]) -> ExperimentConfig:
    """
    Validate raw entries and assemble the experiment.

    Raises:
        ConfigError: If a key is unknown, missing, malformed or out of range,
            or if the adversary cannot run with the chosen dimension
    """
    values = ConfigValidator(EXPERIMENT_SCHEMA).validate_or_raise(entries)

    def line_of(key: str) -> Optional[int]:
        entry = entries.get(key)
        return entry.line if entry else None

    try:
        protocol = ProtocolConfig(
            d=values["d"],
            n_rounds=values["n_rounds"],
            p_bm=values["p_bm"],
            p_cm=values["p_cm"],
            p_d=values["p_d"],
            p_cz=values["p_cz"],
            sample_fraction=values["sample_fraction"],
            probe_fraction=values["probe_fraction"],
            server_assisted_checks=values["server_assisted_checks"],
            alarm_factor=values["alarm_factor"],
            detection_margin=values["detection_margin"],
        )
        channel = ChannelConfig(mu=values["mu"], eta_opt=values["eta_opt"], eta_d=values["eta_d"])
        adversary = AdversaryStrategy(
            kind=values["adversary"],
            eve_channel_eta=values["eve_channel_eta"],
            segments=values["eve_segments"],
            trojan_photons=values["trojan_photons"],
        )
    except InvalidArgumentError as e:
        raise ConfigError(str(e)) from e

    try:
        adversary.validate(protocol.d)
    except UnsupportedStrategyError as e:
        raise ConfigError(str(e), key="adversary", line=line_of("adversary")) from e

    return ExperimentConfig(
        protocol=protocol,
        channel=channel,
        adversary=adversary,
        seed=values["seed"],
        trials=values["trials"],
    )


def parse_config(text: str, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Parse and validate configuration text.

    Args:
        text: Configuration file contents
        overrides: Values that replace (or add) keys, e.g. a sweep value

    Returns:
        Fully validated ExperimentConfig; p_cz defaults to p_d
    """
    entries = read_entries(text)
    for key, value in (overrides or {}).items():
        entries[key] = ConfigEntry(value=str(value))
    config = build_config(entries)
    logger.debug("parsed config: %s", config)
    return config


def load_config(path: Path, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Read and parse a configuration file.

    Raises:
        ConfigError: If the file cannot be read or is invalid
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror or e}") from e
    return parse_config(text, overrides)
