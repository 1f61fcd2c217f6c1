"""Configuration validators."""
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional

from ..errors import ConfigError
from .schemas import ValidationSchema


@dataclass(frozen=True)
class ConfigEntry:
    """Raw `key = value` assignment; line is None for command-line overrides."""
    value: str
    line: Optional[int] = None


class ConfigValidator:
    """Validates raw configuration entries against a schema."""

    def __init__(self, schema: ValidationSchema):
        self.schema = schema

    def validate(self, entries: Mapping[str, ConfigEntry]) -> List[ConfigError]:
        """Validates entries and returns the list of errors, in line order."""
        errors = []
        known = set(self.schema.known_fields)

        for key, entry in entries.items():
            if key not in known:
                errors.append(ConfigError(f"unknown key {key!r}", key=key, line=entry.line))

        for key in self.schema.required_fields:
            if key not in entries:
                errors.append(ConfigError(f"missing required key {key!r}", key=key))

        for key, entry in entries.items():
            if key in known:
                try:
                    self._convert(key, entry)
                except ConfigError as e:
                    errors.append(e)

        return sorted(errors, key=lambda e: (e.line is None, e.line or 0))

    def _convert(self, key: str, entry: ConfigEntry) -> Any:
        parser = self.schema.field_types.get(key, str)
        try:
            value = parser(entry.value)
        except ValueError as e:
            raise ConfigError(f"{key}: {e}", key=key, line=entry.line) from None
        check = self.schema.custom_validators.get(key)
        if check is not None:
            try:
                check(value)
            except ValueError as e:
                raise ConfigError(f"{key} {e}", key=key, line=entry.line) from None
        return value

    def validate_or_raise(self, entries: Mapping[str, ConfigEntry]) -> Dict[str, Any]:
        """Validates and returns typed values with defaults filled in; raises the first error."""
        errors = self.validate(entries)
        if errors:
            raise errors[0]
        values = dict(self.schema.defaults)
        for key, entry in entries.items():
            values[key] = self._convert(key, entry)
        return values
