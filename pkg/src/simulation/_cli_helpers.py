"""Small parsing helpers for command-line values."""
from typing import Dict, Iterable, Tuple

from src.core.errors import ConfigError
from src.core.hodograph import GridSpec


def _floats(text: str, count: int, what: str) -> Tuple[float, ...]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != count:
        raise ConfigError(f"{what} needs {count} comma-separated values, got {len(parts)}: {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{what} values must be numbers: {text!r}") from None


def parse_grid(text: str) -> GridSpec:
    """'t0,t1,x0,x1,nt,nx' -> GridSpec."""
    t0, t1, x0, x1, nt, nx = _floats(text, 6, "--grid")
    if not (nt.is_integer() and nx.is_integer()):
        raise ConfigError(f"--grid node counts must be integers: {text!r}")
    try:
        return GridSpec(t0, t1, x0, x1, int(nt), int(nx))
    except ValueError as exc:
        raise ConfigError(f"--grid: {exc}") from None


def parse_state(text: str) -> Tuple[float, float, float, float]:
    """'u1,u2,p1,p2' -> phase point."""
    return _floats(text, 4, "--state")


def parse_assignments(items: Iterable[str], numeric: bool = True, flag: str = "--set") -> Dict[str, object]:
    """['k=1.0', 'n2=3'] -> {'k': 1.0, 'n2': 3.0}; later items win."""
    result: Dict[str, object] = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        name, value = name.strip(), value.strip()
        if not sep or not name.isidentifier() or not value:
            raise ConfigError(f"{flag} expects name=value, got {item!r}")
        if numeric:
            try:
                result[name] = float(value)
            except ValueError:
                raise ConfigError(f"{flag} {name}: {value!r} is not a number") from None
        else:
            result[name] = value
    return result


__all__ = ["parse_grid", "parse_state", "parse_assignments"]
