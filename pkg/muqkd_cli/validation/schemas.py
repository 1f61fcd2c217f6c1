"""Validation schemas for experiment configuration files."""
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List

from ..adversary import AttackKind, Segment

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


def parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ValueError(f"expected a boolean (true/false/yes/no/1/0/on/off), got {text!r}")


def parse_int(text: str) -> int:
    try:
        return int(text.strip(), 10)
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def parse_float(text: str) -> float:
    try:
        value = float(text.strip())
    except ValueError:
        raise ValueError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {text!r}")
    return value


def _enum_parser(enum_cls) -> Callable[[str], Any]:
    choices = ", ".join(member.value for member in enum_cls)

    def parse(text: str):
        try:
            return enum_cls(text.strip())
        except ValueError:
            raise ValueError(f"expected one of {choices}, got {text!r}") from None

    return parse


def in_range(low: float, high: float, low_open: bool = False, high_open: bool = False) -> Callable[[Any], None]:
    """Validator for low <= x <= high, with optional open ends."""
    left = "(" if low_open else "["
    right = ")" if high_open else "]"

    def check(value) -> None:
        if value <= low if low_open else value < low:
            raise ValueError(f"must lie in {left}{low:g}, {high:g}{right}, got {value:g}")
        if value >= high if high_open else value > high:
            if high_open:
                raise ValueError(f"must be < {high:g}, got {value:g}")
            raise ValueError(f"must lie in {left}{low:g}, {high:g}{right}, got {value:g}")

    return check


def at_least(low: int) -> Callable[[Any], None]:
    def check(value) -> None:
        if value < low:
            raise ValueError(f"must be >= {low}, got {value}")

    return check


def seed_range(value: int) -> None:
    if not 0 <= value < 2 ** 64:
        raise ValueError(f"must be an integer in [0, 2^64), got {value}")


@dataclass
class ValidationSchema:
    """Defines the expected configuration keys."""
    name: str
    required_fields: List[str]
    optional_fields: List[str] = None
    field_types: Dict[str, Callable[[str], Any]] = None
    custom_validators: Dict[str, Callable[[Any], None]] = None
    defaults: Dict[str, Any] = None

    def __post_init__(self):
        if self.optional_fields is None:
            self.optional_fields = []
        if self.field_types is None:
            self.field_types = {}
        if self.custom_validators is None:
            self.custom_validators = {}
        if self.defaults is None:
            self.defaults = {}

    @property
    def known_fields(self) -> List[str]:
        return self.required_fields + self.optional_fields


_PROBABILITY = in_range(0.0, 1.0)

EXPERIMENT_SCHEMA = ValidationSchema(
    name="experiment",
    required_fields=["d", "n_rounds", "p_bm", "p_cm", "p_d"],
    optional_fields=[
        "p_cz", "sample_fraction", "probe_fraction", "mu", "eta_opt", "eta_d",
        "adversary", "eve_channel_eta", "eve_segments", "trojan_photons",
        "server_assisted_checks", "alarm_factor", "detection_margin",
        "seed", "trials",
    ],
    field_types={
        "d": parse_int,
        "n_rounds": parse_int,
        "p_bm": parse_float,
        "p_cm": parse_float,
        "p_d": parse_float,
        "p_cz": parse_float,
        "sample_fraction": parse_float,
        "probe_fraction": parse_float,
        "mu": parse_float,
        "eta_opt": parse_float,
        "eta_d": parse_float,
        "adversary": _enum_parser(AttackKind),
        "eve_channel_eta": parse_float,
        "eve_segments": _enum_parser(Segment),
        "trojan_photons": parse_int,
        "server_assisted_checks": parse_bool,
        "alarm_factor": parse_float,
        "detection_margin": parse_float,
        "seed": parse_int,
        "trials": parse_int,
    },
    custom_validators={
        "d": at_least(2),
        "n_rounds": at_least(1),
        "p_bm": _PROBABILITY,
        "p_cm": _PROBABILITY,
        "p_d": in_range(0.0, 0.5, high_open=True),
        "p_cz": _PROBABILITY,
        "sample_fraction": _PROBABILITY,
        "probe_fraction": _PROBABILITY,
        "mu": in_range(0.0, float("inf"), high_open=True),
        "eta_opt": _PROBABILITY,
        "eta_d": _PROBABILITY,
        "eve_channel_eta": _PROBABILITY,
        "trojan_photons": at_least(2),
        "alarm_factor": in_range(0.0, float("inf"), low_open=True, high_open=True),
        "detection_margin": in_range(0.0, float("inf"), low_open=True, high_open=True),
        "seed": seed_range,
        "trials": at_least(1),
    },
    defaults={
        "p_cz": None,
        "sample_fraction": 0.0,
        "probe_fraction": 0.0,
        "mu": None,
        "eta_opt": 1.0,
        "eta_d": 1.0,
        "adversary": AttackKind.NONE,
        "eve_channel_eta": 1.0,
        "eve_segments": Segment.BOB_CHARLIE,
        "trojan_photons": 2,
        "server_assisted_checks": False,
        "alarm_factor": 10.0,
        "detection_margin": 10.0,
        "seed": 0,
        "trials": 1,
    },
)
