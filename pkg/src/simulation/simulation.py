"""Runs one command against an example and writes its artifacts.

`Simulation.run_simulation()` resolves the example (built-in id or config
file), dispatches to the command and returns a `CommandResult` with the
report, the files written and the exit code.
"""
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.criteria import DEFAULT_THRESHOLD, criterion_on_region
from src.core.errors import ConfigError
from src.core.expr import Program, substitute
from src.core.flows import symmetry_pde_residual
from src.core.geodesic import COMPLETED, integrate, integrate_on_grid, time_reversal_error
from src.core.geometry import bracket_residual_stats, gauss_curvature, relative_error
from src.core.hodograph import (
    GridSpec,
    bracket_closure,
    refinement_study,
    solve_on_grid,
)
from src.data.config import entry_to_config, load_config
from src.data.registry import ExampleEntry, get_example, list_examples
from src.data.stats_export import Exporter, RunStatistics
from src.wrappers.example_wrapper import ExampleWrapper

logger = logging.getLogger(__name__)

COMMANDS = ("verify", "solve", "geodesic", "criterion", "list", "export")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


@dataclass
class RunConfig:
    """Everything a command depends on; equal configs give equal reports."""

    command: str = "verify"
    example: Optional[str] = None
    config_path: Optional[str] = None
    constants: Dict[str, float] = field(default_factory=dict)
    params: Dict[str, str] = field(default_factory=dict)
    preset: Optional[str] = None
    grid: Optional[GridSpec] = None
    state: Optional[Tuple[float, float, float, float]] = None
    out: str = "out"
    seed: int = 0
    samples: int = 1000                 # bracket check points
    curvature_samples: int = 100
    criterion_samples: int = 200
    pde_samples: int = 500
    tol: float = 1e-10                  # integrator rtol = atol
    newton_tol: float = 1e-11
    t_end: float = 1.0
    levels: int = 3                     # refinement levels for the order check
    bracket_tol: float = 1e-9
    curvature_tol: float = 1e-9
    pde_tol: float = 1e-10
    closure_tol: float = 1e-6
    reversal_tol: float = 1e-6
    threshold: float = DEFAULT_THRESHOLD
    order_threshold: float = 1.9
    drift_factor: float = 100.0
    curvature_sign: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.command not in ("list",) and bool(self.example) == bool(self.config_path):
            raise ConfigError("give exactly one of --example or --config")
        if self.samples < 1 or self.criterion_samples < 1 or self.curvature_samples < 1:
            raise ConfigError("sample counts must be positive")
        if self.tol <= 0 or self.newton_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.t_end < 0:
            raise ConfigError("--t-end must be non-negative")


@dataclass
class CommandResult:
    command: str
    report: Dict[str, object]
    files: List[str]
    exit_code: int

    @property
    def passed(self) -> bool:
        return self.exit_code == EXIT_OK


class Simulation:
    def __init__(self, config: RunConfig):
        self.config = config
        self.stats = RunStatistics()
        self.wrapper: Optional[ExampleWrapper] = None
        self.files: List[str] = []

    def _resolve_entry(self) -> ExampleEntry:
        cfg = self.config
        if cfg.config_path:
            if cfg.params:
                raise ConfigError("--param only applies to built-in families")
            return load_config(cfg.config_path)
        return get_example(cfg.example, cfg.params)

    def _create_wrapper_from_config(self) -> ExampleWrapper:
        # one wrapper per run
        if self.wrapper is None:
            cfg = self.config
            self.wrapper = ExampleWrapper(self._resolve_entry(), cfg.constants, cfg.preset, cfg.grid).build()
        return self.wrapper

    def _rng(self, stream: int) -> np.random.Generator:
        # one independent stream per check
        return np.random.default_rng([self.config.seed, stream])

    def _path(self, suffix: str) -> str:
        return os.path.join(self.config.out, f"{self.wrapper.id}-{suffix}")

    def _write_report(self, command: str, checks: Dict[str, object], extra: Optional[Dict] = None) -> CommandResult:
        entry = self.wrapper.entry
        report = {
            "command": command,
            "example": entry.id,
            "kind": entry.kind,
            "degree": entry.degree,
            "constants": dict(entry.constants),
            "parameters": dict(entry.parameters),
            "checks": checks,
            "passed": self.stats.all_passed,
            "first_failure": self.stats.first_failure,
            **(extra or {}),
        }
        self.files.append(Exporter.export_stats_json(self._path(f"{command}.json"), self.stats, report))
        code = EXIT_OK if self.stats.all_passed else EXIT_FAILED
        if code != EXIT_OK:
            logger.warning("%s %s failed: first failing check %s", command, entry.id, self.stats.first_failure)
        logger.info("%s %s: %d/%d checks passed in %.2fs", command, entry.id, self.stats.passed,
                    self.stats.checks, self.stats.elapsed)
        return CommandResult(command, report, list(self.files), code)

    # checks -------------------------------------------------------------------

    def _bracket_check(self) -> Dict[str, object]:
        w = self.wrapper
        points = w.region.sample(self._rng(1), self.config.samples)
        stats = bracket_residual_stats(w.integral, w.hamiltonian, points, tolerance=self.config.bracket_tol)
        self.stats.record_check("bracket", stats.passed)
        return stats.to_dict()

    def _curvature_check(self) -> Optional[Dict[str, object]]:
        w = self.wrapper
        closed_form = w.entry.curvature
        if closed_form is None:
            return None
        if w.entry.constants:
            closed_form = substitute(closed_form, w.entry.constants)
        metric = w.metric
        u, v = metric.coordinates
        points = w.region.sample(self._rng(2), self.config.curvature_samples)
        values = Program([gauss_curvature(metric), closed_form]).evaluate_arrays(
            {u: points[:, 0], v: points[:, 1]}, on_error="nan")
        computed, expected = (np.broadcast_to(x, (len(points),)) for x in values)
        errors = relative_error(computed, expected)
        ok = np.isfinite(errors)
        worst = float(errors[ok].max()) if ok.any() else float("nan")
        passed = bool(ok.any()) and worst <= self.config.curvature_tol
        self.stats.record_check("curvature", passed)
        return {"samples": len(points), "evaluated": int(ok.sum()), "max_relative_error": worst,
                "tolerance": self.config.curvature_tol, "passed": passed}

    def _criterion(self) -> Dict[str, object]:
        w = self.wrapper
        report = criterion_on_region(w.metric, w.region, self._rng(3), self.config.criterion_samples,
                                     self.config.threshold, self.config.curvature_sign)
        result = report.to_dict()
        expected = w.entry.expected_verdict
        result["expected_verdict"] = expected
        if expected is not None:
            self.stats.record_check("criterion", report.verdict == expected)
        return result

    def _anchor_check(self) -> Dict[str, object]:
        w = self.wrapper
        anchor = w.anchor
        residual = float(np.max(np.abs(w.system.residual(anchor.a, anchor.t, anchor.x))))
        passed = residual <= self.config.newton_tol
        self.stats.record_check("anchor", passed)
        return {**anchor.as_dict(), "residual": residual, "tolerance": self.config.newton_tol, "passed": passed}

    def _generator_check(self) -> Optional[Dict[str, object]]:
        w = self.wrapper
        if not w.generators:
            return None
        report = symmetry_pde_residual(w.entry.degree, w.generators, samples=self.config.pde_samples,
                                       rng=self._rng(4), names=w.system.unknowns, tolerance=self.config.pde_tol,
                                       positive_g=True)
        self.stats.record_check("symmetry-pde", report.passed)
        return report.to_dict()

    # commands -----------------------------------------------------------------

    def verify(self) -> CommandResult:
        w = self.wrapper
        checks: Dict[str, object] = {}
        if w.entry.is_implicit:
            checks["anchor"] = self._anchor_check()
            generators = self._generator_check()
            if generators is not None:
                checks["symmetry_pde"] = generators
        else:
            checks["bracket"] = self._bracket_check()
            curvature = self._curvature_check()
            if curvature is not None:
                checks["curvature"] = curvature
            checks["criterion"] = self._criterion()
        return self._write_report("verify", checks)

    def _solve_grid(self):
        w = self.wrapper
        anchor = w.anchor
        return solve_on_grid(w.system, w.grid, anchor.a, anchor=(anchor.t, anchor.x), tol=self.config.newton_tol)

    def solve(self) -> CommandResult:
        cfg, w = self.config, self.wrapper
        anchor = w.anchor
        grid = self._solve_grid()
        self.files.append(Exporter.export_grid_csv(self._path("grid.csv"), grid))
        checks: Dict[str, object] = {}
        converged = grid.all_converged
        self.stats.record_check("grid-converged", converged)
        checks["grid"] = {"spec": w.grid.as_list(), "status": grid.status_counts(), "passed": converged}
        if converged:
            closure = bracket_closure(grid, w.entry.degree)
            worst = float(np.nanmax(closure)) if np.isfinite(closure).any() else float("nan")
            ok = bool(np.isfinite(worst)) and worst <= cfg.closure_tol
            self.stats.record_check("bracket-closure", ok)
            checks["bracket_closure"] = {"max_relative": worst, "tolerance": cfg.closure_tol, "passed": ok}
        if cfg.levels >= 2:
            study = refinement_study(w.system, w.quasi_linear, w.grid, anchor.a, anchor=(anchor.t, anchor.x),
                                     levels=cfg.levels, tol=cfg.newton_tol)
            order = study.min_order
            ok = order is not None and order >= cfg.order_threshold
            self.stats.record_check("convergence-order", ok)
            checks["refinement"] = {**study.to_dict(), "threshold": cfg.order_threshold, "passed": ok}
        return self._write_report("solve", checks)

    def geodesic(self) -> CommandResult:
        cfg, w = self.config, self.wrapper
        checks: Dict[str, object] = {}
        reversal = None
        if w.entry.is_implicit:
            grid = self._solve_grid()
            spec = w.grid
            state = cfg.state or (0.5 * (spec.t0 + spec.t1), 0.5 * (spec.x0 + spec.x1), 0.3, 0.2)
            trajectory = integrate_on_grid(grid, w.entry.degree, state, cfg.t_end, cfg.tol)
            # F through interpolated a_k is only conserved up to the spline error
            checked = ("H",)
        else:
            state = w.initial_state(cfg.state)
            trajectory = integrate(w.metric, state, cfg.t_end, cfg.tol, integrals={"F": w.integral},
                                   region=w.region)
            checked = ("H", "F")
            if trajectory.status == COMPLETED and cfg.t_end > 0:
                reversal = time_reversal_error(w.metric, state, cfg.t_end, cfg.tol, w.region)
        self.files.append(Exporter.export_trajectory_csv(self._path("trajectory.csv"), trajectory))
        limit = cfg.drift_factor * cfg.tol
        for name, drift in trajectory.drift_stats().items():
            entry = {**drift, "tolerance": limit if name in checked else None}
            if name in checked:
                ok = bool(np.isfinite(drift["relative_drift"])) and drift["relative_drift"] <= limit
                self.stats.record_check(f"drift-{name}", ok)
                entry["passed"] = ok
            checks[f"drift_{name}"] = entry
        if reversal is not None:
            ok = reversal <= cfg.reversal_tol
            self.stats.record_check("time-reversal", ok)
            checks["time_reversal"] = {"error": reversal, "tolerance": cfg.reversal_tol, "passed": ok}
        summary = trajectory.summary()
        summary.pop("drift")
        return self._write_report("geodesic", checks, {"trajectory": summary, "initial_state": list(state)})

    def criterion(self) -> CommandResult:
        return self._write_report("criterion", {"criterion": self._criterion()})

    def export(self) -> CommandResult:
        path = self._path("config.json")
        self.files.append(Exporter.export_json(path, entry_to_config(self.wrapper.entry)))
        return CommandResult("export", {"example": self.wrapper.id, "path": path}, list(self.files), EXIT_OK)

    def run_simulation(self) -> CommandResult:
        self.stats.reset()
        self.files = []
        if self.config.command == "list":
            return CommandResult("list", {"examples": list_examples()}, [], EXIT_OK)
        self._create_wrapper_from_config()
        logger.info("running %s on %s", self.config.command, self.wrapper.id)
        return getattr(self, self.config.command)()


__all__ = ["RunConfig", "CommandResult", "Simulation", "COMMANDS", "EXIT_OK", "EXIT_FAILED", "EXIT_CONFIG"]
