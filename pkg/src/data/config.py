"""JSON config files describing problems with the same fields as ExampleEntry.

A minimal explicit config:

    {
      "id": "my-metric",
      "kind": "explicit-metric",
      "degree": 1,
      "metric": {"g11": "exp(x)", "g12": 0, "g22": "exp(x)"},
      "integral": {"coefficients": [0, 1]},
      "region": {"box": [[-1, 1], [-1, 1]]}
    }

Integrals may instead be given as {"expression": ..., "forms": {name: [c1, c2]}}
where each form stands for c1*p1 + c2*p2.
"""
import json
import logging
from typing import Dict, Mapping, Optional

from src.core.errors import (
    ConfigError,
    DimensionError,
    GridError,
    IntegrabilityError,
    NormalizationError,
    UnassignedVariableError,
)
from src.core.expr_text import parse, to_text
from src.core.geometry import Metric2D, MomentumPoly, Region
from src.core.hodograph import GridSpec, ImplicitSystem

from .registry import FAMILIES, FAMILY, IMPLICIT, KINDS, Anchor, ExampleEntry, Preset, get_example
from .stats_export import Exporter

logger = logging.getLogger(__name__)

GRID_KEYS = ("t0", "t1", "x0", "x1", "nt", "nx")


def _text(e) -> str:
    return to_text(e)


def _grid_to_config(grid: Optional[GridSpec]):
    if grid is None:
        return None
    return dict(zip(GRID_KEYS, grid.as_list()))


def _region_to_config(region: Optional[Region]):
    if region is None:
        return None
    return {
        "box": [list(region.box[0]), list(region.box[1])],
        "singular_loci": [_text(p) for p in region.singular_loci],
        "margin": region.margin,
    }


def entry_to_config(entry: ExampleEntry) -> Dict[str, object]:
    """Config dict of an entry; families are written hydrated with their parameters."""
    config: Dict[str, object] = {
        "id": entry.id,
        "kind": entry.kind,
        "degree": entry.degree,
        "description": entry.description,
        "coordinates": list(entry.coordinates),
    }
    if entry.metric is not None:
        config["metric"] = dict(zip(("g11", "g12", "g22"), (_text(c) for c in entry.metric.components)))
    if entry.integral is not None:
        config["integral"] = {"coefficients": [_text(c) for c in entry.integral.coefficients]}
    if entry.curvature is not None:
        config["curvature"] = _text(entry.curvature)
    if entry.region is not None:
        config["region"] = _region_to_config(entry.region)
    if entry.system is not None:
        config["implicit"] = {
            "n": entry.degree,
            "unknowns": list(entry.system.unknowns),
            "equations": [_text(e) for e in entry.system.equations],
        }
    if entry.generators:
        config["generators"] = [_text(g) for g in entry.generators]
    if entry.constants:
        config["constants"] = dict(entry.constants)
    if entry.anchor is not None:
        config["anchor"] = entry.anchor.as_dict()
    if entry.grid is not None:
        config["grid"] = _grid_to_config(entry.grid)
    if entry.presets:
        config["presets"] = {
            name: {
                "constants": dict(p.constants),
                "anchor": p.anchor.as_dict(),
                "grid": _grid_to_config(p.grid),
                "description": p.description,
            }
            for name, p in entry.presets.items()
        }
    if entry.parameters:
        config["parameters"] = dict(entry.parameters)
    if entry.initial_state is not None:
        config["initial_state"] = list(entry.initial_state)
    if entry.expected_verdict is not None:
        config["expected_verdict"] = entry.expected_verdict
    return config


def _require(config: Mapping, key: str, where: str = "config"):
    if key not in config:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return config[key]


def _anchor(data: Mapping, where: str) -> Anchor:
    try:
        return Anchor(_require(data, "t", where), _require(data, "x", where), _require(data, "a", where))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: invalid anchor: {exc}") from None


def _grid(data, where: str) -> Optional[GridSpec]:
    if data is None:
        return None
    try:
        if isinstance(data, Mapping):
            return GridSpec(*(data[k] for k in GRID_KEYS))
        return GridSpec(*data)
    except (KeyError, TypeError, GridError) as exc:
        raise ConfigError(f"{where}: invalid grid: {exc}") from None


def _region(data, coordinates) -> Optional[Region]:
    if data is None:
        return None
    try:
        return Region(
            tuple(tuple(b) for b in _require(data, "box", "region")),
            tuple(parse(p) for p in data.get("singular_loci", ())),
            float(data.get("margin", 0.1)),
            coordinates,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, IntegrabilityError):
            raise
        raise ConfigError(f"region: {exc}") from None


def _integral(data: Mapping, coordinates) -> MomentumPoly:
    if "coefficients" in data:
        return MomentumPoly(tuple(parse(c) for c in data["coefficients"]), coordinates)
    if "expression" in data:
        forms = {}
        for name, pair in data.get("forms", {}).items():
            if len(pair) != 2:
                raise ConfigError(f"integral form {name!r} needs two coefficients [c1, c2]")
            forms[name] = (parse(pair[0]), parse(pair[1]))
        return MomentumPoly.from_expr(parse(data["expression"]), forms, coordinates)
    raise ConfigError("integral needs either 'coefficients' or 'expression'")


def _build_entry(config: Mapping[str, object]) -> ExampleEntry:
    if not isinstance(config, Mapping):
        raise ConfigError("a config must be a JSON object")
    entry_id = str(_require(config, "id"))
    kind = _require(config, "kind", entry_id)
    if kind not in KINDS:
        raise ConfigError(f"{entry_id}: unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    if kind == FAMILY and "metric" not in config:
        if entry_id not in FAMILIES:
            raise ConfigError(f"{entry_id}: a family without a metric must name a built-in family")
        return get_example(entry_id, config.get("parameters"))
    default_coordinates = ("t", "x") if kind == IMPLICIT else ("x", "y")
    coordinates = tuple(config.get("coordinates", default_coordinates))
    fields: Dict[str, object] = {
        "id": entry_id,
        "kind": kind,
        "description": str(config.get("description", "")),
        "coordinates": coordinates,
        "constants": dict(config.get("constants", {})),
        "parameters": dict(config.get("parameters", {})),
        "expected_verdict": config.get("expected_verdict"),
        "region": _region(config.get("region"), coordinates),
        "grid": _grid(config.get("grid"), entry_id),
    }
    if "initial_state" in config:
        state = tuple(float(v) for v in config["initial_state"])
        if len(state) != 4:
            raise ConfigError(f"{entry_id}: initial_state needs four values (u1, u2, p1, p2)")
        fields["initial_state"] = state
    if "curvature" in config:
        fields["curvature"] = parse(config["curvature"])
    fields["generators"] = tuple(parse(g) for g in config.get("generators", ()))

    if kind == IMPLICIT:
        implicit = _require(config, "implicit", entry_id)
        n = int(_require(implicit, "n", "implicit"))
        unknowns = tuple(implicit.get("unknowns", [f"a{k}" for k in range(n)]))
        equations = tuple(parse(e) for e in _require(implicit, "equations", "implicit"))
        fields["system"] = ImplicitSystem(equations, unknowns, fields["constants"])
        fields["degree"] = n
        fields["anchor"] = _anchor(_require(config, "anchor", entry_id), f"{entry_id} anchor")
        fields["presets"] = {
            name: Preset(
                dict(p.get("constants", {})),
                _anchor(_require(p, "anchor", name), f"preset {name}"),
                _grid(p.get("grid"), name),
                str(p.get("description", "")),
            )
            for name, p in config.get("presets", {}).items()
        }
    else:
        metric = _require(config, "metric", entry_id)
        fields["metric"] = Metric2D(*(parse(_require(metric, k, "metric")) for k in ("g11", "g12", "g22")),
                                    coordinates=coordinates)
        fields["integral"] = _integral(_require(config, "integral", entry_id), coordinates)
        fields["degree"] = int(config.get("degree", fields["integral"].degree))
    entry = ExampleEntry(**fields)
    logger.info("loaded config %s (%s, degree %d)", entry.id, entry.kind, entry.degree)
    return entry


def entry_from_config(config: Mapping[str, object]) -> ExampleEntry:
    """ExampleEntry from a config dict; structural problems surface as ConfigError."""
    try:
        return _build_entry(config)
    except (DimensionError, UnassignedVariableError, NormalizationError) as exc:
        raise ConfigError(f"{config.get('id', 'config')}: {exc}") from exc


def load_config(path: str) -> ExampleEntry:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return entry_from_config(data)


def save_config(entry: ExampleEntry, path: str) -> str:
    return Exporter.export_json(path, entry_to_config(entry))


__all__ = ["entry_to_config", "entry_from_config", "load_config", "save_config"]
