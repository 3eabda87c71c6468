"""Simulation package: runs commands against examples.

Exposes `Simulation` and `RunConfig` at `src.simulation` so callers can write
`from src.simulation import Simulation`.
"""
from .simulation import CommandResult, RunConfig, Simulation

__all__ = ["Simulation", "RunConfig", "CommandResult"]
