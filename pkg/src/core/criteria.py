"""Obstruction to first integrals linear in the momenta.

If a metric admits a linear integral (a Killing field), the scalar curvature R,
its squared gradient L = g^{ij} R_i R_j and its Laplace-Beltrami Δ = ΔR are
functionally dependent, so both Jacobian determinants d(R, L) and d(R, Δ)
vanish. Nonzero determinants on most of a region rule such an integral out;
vanishing ones prove nothing.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional

import numpy as np

from .errors import DomainError
from .expr import Expr, Program, add, differentiate, div, mul
from .geometry import Metric2D, Region, scalar_curvature

logger = logging.getLogger(__name__)

OBSTRUCTED = "obstructed"
CONSISTENT = "consistent-with-linear-integral"
INCONCLUSIVE = "inconclusive"

DEFAULT_THRESHOLD = 1e-8
MAJORITY = 0.9


class CriterionScalars(NamedTuple):
    R: Expr
    L: Expr
    Delta: Expr


def criterion_scalars(metric: Metric2D, sign: int = 1) -> CriterionScalars:
    u, v = metric.coordinates
    h11, h12, h22 = metric.inverse
    R = scalar_curvature(metric, sign)
    R_u, R_v = differentiate(R, u), differentiate(R, v)
    L = add(mul(h11, R_u, R_u), mul(2, h12, R_u, R_v), mul(h22, R_v, R_v))
    # (1/sqrt d) d_i(sqrt d X^i) = d_i X^i + X^i d_i(d) / (2d)
    X1 = add(mul(h11, R_u), mul(h12, R_v))
    X2 = add(mul(h12, R_u), mul(h22, R_v))
    d = metric.det
    divergence = add(differentiate(X1, u), differentiate(X2, v))
    correction = div(add(mul(differentiate(d, u), X1), mul(differentiate(d, v), X2)), mul(2, d))
    return CriterionScalars(R, L, add(divergence, correction))


@dataclass
class CriterionReport:
    points: np.ndarray
    det_rl: np.ndarray           # normalized d(R, L)/d(u, v); NaN where inadmissible
    det_rd: np.ndarray           # normalized d(R, Δ)/d(u, v)
    raw_det_rl: np.ndarray
    raw_det_rd: np.ndarray
    threshold: float
    verdict: str

    @property
    def admissible(self) -> np.ndarray:
        return np.isfinite(self.det_rl) & np.isfinite(self.det_rd)

    @property
    def exceeding_fraction(self) -> float:
        ok = self.admissible
        exceed = np.maximum(np.abs(self.det_rl[ok]), np.abs(self.det_rd[ok])) > self.threshold
        return float(exceed.mean()) if ok.any() else 0.0

    def to_dict(self) -> Dict[str, object]:
        ok = self.admissible
        return {
            "verdict": self.verdict,
            "threshold": self.threshold,
            "samples": int(len(self.points)),
            "admissible": int(ok.sum()),
            "exceeding_fraction": self.exceeding_fraction,
            "points": [
                {
                    "point": [float(p[0]), float(p[1])],
                    "det_rl": _finite_or_none(a),
                    "det_rd": _finite_or_none(b),
                }
                for p, a, b in zip(self.points, self.det_rl, self.det_rd)
            ],
        }


def _finite_or_none(value) -> Optional[float]:
    value = float(value)
    return value if np.isfinite(value) else None


def _normalized(a_u, a_v, b_u, b_v):
    raw = a_u * b_v - a_v * b_u
    scale = np.hypot(a_u, a_v) * np.hypot(b_u, b_v)
    with np.errstate(divide="ignore", invalid="ignore"):
        # a vanishing gradient makes the pair dependent
        return raw, np.where(scale > 0, raw / scale, np.where(np.isnan(scale), np.nan, 0.0))


def verdict_of(det_rl: np.ndarray, det_rd: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> str:
    """Majority verdict over the points where both determinants are finite.

    A point counts as exceeding when either of its two determinants exceeds
    `threshold`; which one may differ from point to point.
    """
    ok = np.isfinite(det_rl) & np.isfinite(det_rd)
    if not ok.any():
        raise DomainError("no admissible sample points for the criterion")
    big = np.maximum(np.abs(det_rl[ok]), np.abs(det_rd[ok]))
    if np.mean(big > threshold) >= MAJORITY:
        return OBSTRUCTED
    if np.mean(big <= threshold) >= MAJORITY:
        return CONSISTENT
    return INCONCLUSIVE


def criterion_determinants(metric: Metric2D, points: np.ndarray, threshold: float = DEFAULT_THRESHOLD,
                           sign: int = 1) -> CriterionReport:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    u, v = metric.coordinates
    scalars = criterion_scalars(metric, sign)
    exprs: List[Expr] = []
    for s in scalars:
        exprs.extend((differentiate(s, u), differentiate(s, v)))
    program = Program(exprs)
    logger.debug("criterion program has %d nodes", len(program))
    values = program.evaluate_arrays({u: points[:, 0], v: points[:, 1]}, on_error="nan")
    R_u, R_v, L_u, L_v, D_u, D_v = (np.broadcast_to(x, (len(points),)) for x in values)
    raw_rl, det_rl = _normalized(R_u, R_v, L_u, L_v)
    raw_rd, det_rd = _normalized(R_u, R_v, D_u, D_v)
    verdict = verdict_of(det_rl, det_rd, threshold)
    skipped = int(np.sum(~(np.isfinite(det_rl) & np.isfinite(det_rd))))
    if skipped:
        logger.warning("criterion skipped %d of %d points (evaluation failed)", skipped, len(points))
    logger.info("criterion verdict %s over %d points", verdict, len(points) - skipped)
    return CriterionReport(points, det_rl, det_rd, raw_rl, raw_rd, threshold, verdict)


def criterion_on_region(metric: Metric2D, region: Region, rng: np.random.Generator, samples: int = 200,
                        threshold: float = DEFAULT_THRESHOLD, sign: int = 1) -> CriterionReport:
    return criterion_determinants(metric, region.sample(rng, samples), threshold, sign)


__all__ = [
    "OBSTRUCTED",
    "CONSISTENT",
    "INCONCLUSIVE",
    "DEFAULT_THRESHOLD",
    "CriterionScalars",
    "CriterionReport",
    "criterion_scalars",
    "criterion_determinants",
    "criterion_on_region",
    "verdict_of",
]
