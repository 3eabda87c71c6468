"""Turns an ExampleEntry plus user overrides into ready-to-run core objects.

The wrapper is built once per command: constants and presets are applied,
constants are substituted into metrics and integrals, and the grid, region and
quasi-linear system are resolved.
"""
import logging
from typing import Dict, Mapping, Optional, Tuple

from src.core.errors import ConfigError
from src.core.flows import QuasiLinearSystem, build_V
from src.core.geometry import Metric2D, MomentumPoly, Region, hamiltonian
from src.core.hodograph import GridSpec, ImplicitSystem
from src.data.registry import Anchor, ExampleEntry

logger = logging.getLogger(__name__)


class ExampleWrapper:
    def __init__(self, entry: ExampleEntry, constants: Optional[Mapping[str, float]] = None,
                 preset: Optional[str] = None, grid: Optional[GridSpec] = None):
        self.source = entry
        self.overrides: Dict[str, float] = dict(constants or {})
        self.preset = preset
        self.grid_override = grid
        self.entry: Optional[ExampleEntry] = None

    def build(self) -> "ExampleWrapper":
        entry = self.source
        if self.preset:
            entry = entry.with_preset(self.preset)
        entry = entry.with_constants(self.overrides)
        self.entry = entry
        logger.debug("built %s with constants %s", entry.id, dict(entry.constants))
        return self

    def _built(self) -> ExampleEntry:
        if self.entry is None:
            self.build()
        return self.entry

    @property
    def id(self) -> str:
        return self._built().id

    @property
    def metric(self) -> Metric2D:
        entry = self._built()
        if entry.metric is None:
            raise ConfigError(f"{entry.id} has no explicit metric; solve it on a grid first")
        return entry.metric.substitute(entry.constants) if entry.constants else entry.metric

    @property
    def integral(self) -> MomentumPoly:
        entry = self._built()
        if entry.integral is None:
            raise ConfigError(f"{entry.id} has no explicit integral")
        return entry.integral.substitute(entry.constants) if entry.constants else entry.integral

    @property
    def hamiltonian(self) -> MomentumPoly:
        return hamiltonian(self.metric)

    @property
    def region(self) -> Region:
        entry = self._built()
        if entry.region is None:
            raise ConfigError(f"{entry.id} has no sampling region")
        return entry.region

    @property
    def system(self) -> ImplicitSystem:
        entry = self._built()
        if entry.system is None:
            raise ConfigError(f"{entry.id} is not an implicit hodograph example")
        return entry.system

    @property
    def anchor(self) -> Anchor:
        return self._built().anchor

    @property
    def grid(self) -> GridSpec:
        grid = self.grid_override or self._built().grid
        if grid is None:
            raise ConfigError(f"{self.id} has no default grid; pass --grid t0,t1,x0,x1,nt,nx")
        return grid

    @property
    def quasi_linear(self) -> QuasiLinearSystem:
        entry = self._built()
        return build_V(entry.degree, entry.system.unknowns if entry.system is not None else None)

    @property
    def generators(self) -> Tuple:
        return self._built().bound_generators()

    def initial_state(self, override=None) -> Tuple[float, float, float, float]:
        state = override if override is not None else self._built().initial_state
        if state is None:
            raise ConfigError(f"{self.id} has no default initial state; pass --state u1,u2,p1,p2")
        state = tuple(float(v) for v in state)
        if len(state) != 4:
            raise ConfigError(f"an initial state needs four values, got {len(state)}")
        return state


__all__ = ["ExampleWrapper"]
