"""Configuration validation for the MUQKD simulator"""
from .schemas import EXPERIMENT_SCHEMA, ValidationSchema
from .validators import ConfigEntry, ConfigValidator

__all__ = ['EXPERIMENT_SCHEMA', 'ValidationSchema', 'ConfigEntry', 'ConfigValidator']
