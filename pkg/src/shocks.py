"""Asset-price shocks and their calibration to a single-bank failure probability.

A positive draw is a price fall (a loss), a negative draw a price rise.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Union

import numpy as np
from scipy import stats


class ShockKind(str, Enum):
    TWO_SIDED_EXPONENTIAL = "two_sided_exponential"
    STUDENT_T = "student_t"


@dataclass(frozen=True)
class ShockDistribution:
    kind: ShockKind
    rate: float = 1.0
    dof: float = 1.5
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ShockKind(self.kind))
        if self.rate <= 0 or self.dof <= 0 or self.scale <= 0:
            raise ValueError("shock rate, dof and scale must be positive")

    def frozen(self) -> stats.rv_continuous:
        """The matching scipy distribution object."""
        if self.kind is ShockKind.TWO_SIDED_EXPONENTIAL:
            return stats.laplace(scale=1.0 / self.rate)
        return stats.t(self.dof, scale=self.scale)

    def exceedance(self, threshold: float) -> float:
        """P(v > threshold)."""
        return float(self.frozen().sf(threshold))

    def as_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "rate": self.rate,
            "dof": self.dof,
            "scale": self.scale,
        }


def sample_shock(
    dist: ShockDistribution,
    n_assets: int,
    seed: Union[int, np.random.Generator],
    size: Union[int, None] = None,
) -> np.ndarray:
    """Independent price falls for ``n_assets`` assets.

    With ``size`` the result has shape (size, n_assets), one row per scenario.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    shape = n_assets if size is None else (size, n_assets)
    if dist.kind is ShockKind.TWO_SIDED_EXPONENTIAL:
        return rng.laplace(0.0, 1.0 / dist.rate, size=shape)
    return dist.scale * rng.standard_t(dist.dof, size=shape)


def failure_threshold(gamma: float, theta: float) -> float:
    """Price fall gamma / (1 - theta) that wipes out a fully specialized bank."""
    return gamma / (1.0 - theta)


def calibrate_rate(gamma: float, theta: float, p_target: float) -> float:
    """Exponential rate lambda with P(v > gamma / (1 - theta)) = p_target.

    Inverts (1/2) exp(-lambda x) = p_target.
    """
    _check_probability(p_target)
    return float(np.log(1.0 / (2.0 * p_target)) / failure_threshold(gamma, theta))


def calibrate_scale(gamma: float, theta: float, p_target: float, dof: float) -> float:
    """Student t scale s with P(v > gamma / (1 - theta)) = p_target."""
    _check_probability(p_target)
    return failure_threshold(gamma, theta) / float(stats.t.isf(p_target, dof))


def calibrated_distribution(
    kind: Union[ShockKind, str],
    gamma: float,
    theta: float,
    p_target: float,
    dof: float = 1.5,
) -> ShockDistribution:
    kind = ShockKind(kind)
    if kind is ShockKind.TWO_SIDED_EXPONENTIAL:
        return ShockDistribution(kind, rate=calibrate_rate(gamma, theta, p_target))
    return ShockDistribution(
        kind, dof=dof, scale=calibrate_scale(gamma, theta, p_target, dof)
    )


def _check_probability(p_target: float) -> None:
    if not 0 < p_target < 0.5:
        raise ValueError(f"target probability must lie in (0, 1/2), got {p_target}")
