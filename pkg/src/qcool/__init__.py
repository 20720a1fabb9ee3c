"""Quantum-trajectory simulator for cooling spin lattices with a measured, reset bath."""

from .config import config_from_dict, config_to_dict, parse_config

__all__ = ["config_from_dict", "config_to_dict", "parse_config"]
