"""Run statistics and exporters.

CSV files follow RFC 4180 with a header row and 17 significant digits per
float; JSON reports keep a stable key order. Files are written to a temporary
sibling first and renamed into place.
"""
import csv
import io
import json
import logging
import math
import os
import tempfile
import time
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)


def format_value(value) -> str:
    """Cell text: full precision for floats, 'nan'/'inf' spelled out."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def atomic_write_text(path: str, text: str) -> str:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug("wrote %s (%d bytes)", path, len(text))
    return path


class RunStatistics:
    """Counts the checks a command performed and how long it took."""

    def __init__(self):
        self.reset()

    def reset(self):
        self.checks = 0
        self.passed = 0
        self.failed: List[str] = []
        self.start_time = time.time()

    def record_check(self, name: str, ok: bool):
        self.checks += 1
        if ok:
            self.passed += 1
        else:
            self.failed.append(name)

    @property
    def pass_rate(self) -> float:
        return (self.passed / self.checks) if self.checks else 0.0

    @property
    def all_passed(self) -> bool:
        return not self.failed

    @property
    def first_failure(self) -> Optional[str]:
        return self.failed[0] if self.failed else None

    @property
    def elapsed(self) -> float:
        return time.time() - self.start_time

    def to_dict(self) -> Dict[str, object]:
        return {
            "checks": self.checks,
            "passed": self.passed,
            "failed": list(self.failed),
            "pass_rate": self.pass_rate,
        }


class Exporter:
    @staticmethod
    def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\r\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_value(v) for v in row])
        return buffer.getvalue()

    @staticmethod
    def json_text(data: Dict[str, object]) -> str:
        return json.dumps(_jsonable(data), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def export_csv(cls, path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
        return atomic_write_text(path, cls.csv_text(header, rows))

    @classmethod
    def export_json(cls, path: str, data: Dict[str, object]) -> str:
        return atomic_write_text(path, cls.json_text(data))

    @classmethod
    def export_grid_csv(cls, path: str, grid) -> str:
        """One row per node: t, x, a_0.., status, residual."""
        header = ["t", "x", *grid.unknowns, "status", "residual"]
        return cls.export_csv(path, header, grid.rows())

    @classmethod
    def export_trajectory_csv(cls, path: str, trajectory) -> str:
        return cls.export_csv(path, trajectory.columns, trajectory.rows())

    @classmethod
    def export_stats_json(cls, path: str, stats: RunStatistics, report: Dict[str, object]) -> str:
        return cls.export_json(path, {**report, "statistics": stats.to_dict()})


__all__ = ["RunStatistics", "Exporter", "format_value", "atomic_write_text"]
