"""Fairness and efficiency statistics of simulation runs.
"""

__all__ = ['MeanEstimate', 'RunStatistics', 'jain_index', 'gain_fairness',
           'mean_with_ci', 'efficiency_flag', 'EFFICIENCY_BAND',
           'EFFICIENCY_FLOOR', 'CI_PRECISION']

import numpy as np
from dataclasses import dataclass
from scipy.stats import norm
from .errors import UndefinedIndexError, InsufficientDataError

# expected proposed/maxutil total-utility ratio, and hard failure threshold
EFFICIENCY_BAND = (0.8, 1.0)
EFFICIENCY_FLOOR = 0.6

# a mean is precise when its confidence interval is narrower than this
# fraction of the mean
CI_PRECISION = 0.05


def jain_index(values) -> float:
    """Jain's fairness index ``(sum x)^2 / (R sum x^2)``, between 1/R and 1.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise UndefinedIndexError("need a nonempty vector of values")
    if np.any(x < 0):
        raise UndefinedIndexError("values must be nonnegative")
    sq = np.sum(x**2)
    if sq == 0:
        raise UndefinedIndexError("fairness index of an all-zero vector")
    return float(np.sum(x)**2/(x.size*sq))


def gain_fairness(gains) -> float:
    """Jain index over gains clamped at zero; NaN if undefined (all gains
    nonpositive or any gain NaN).
    """
    g = np.asarray(gains, dtype=float)
    if np.any(np.isnan(g)):
        return np.nan
    try:
        return jain_index(np.maximum(g, 0))
    except UndefinedIndexError:
        return np.nan


@dataclass(frozen=True)
class MeanEstimate:
    """Sample mean with a normal-approximation confidence interval.

    Unpacks as ``mean, half_width``.
    """
    mean: float
    half_width: float
    level: float
    samples: int

    @property
    def precise(self) -> bool:
        """Whether the interval is narrower than `CI_PRECISION` of the mean.
        """
        return bool(2*self.half_width < CI_PRECISION*abs(self.mean))

    def __iter__(self):
        return iter((self.mean, self.half_width))

    def as_dict(self) -> dict:
        return {'mean': self.mean, 'half_width': self.half_width,
                'level': self.level, 'samples': self.samples,
                'precise': self.precise}


def mean_with_ci(samples, level: float = 0.95) -> MeanEstimate:
    """Mean and half width of its `level` confidence interval."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {x.size}")
    if not 0 < level < 1:
        raise InsufficientDataError(f"invalid confidence level {level}")
    z = norm.ppf(0.5 + level/2)
    half = z*np.std(x, ddof=1)/np.sqrt(x.size)
    return MeanEstimate(float(np.mean(x)), float(half), level, x.size)


def efficiency_flag(ratio: float) -> str:
    """'ok' inside `EFFICIENCY_BAND`, 'failed' below `EFFICIENCY_FLOOR`,
    'outside-band' otherwise.
    """
    if np.isnan(ratio) or ratio < EFFICIENCY_FLOOR:
        return 'failed'
    lo, hi = EFFICIENCY_BAND
    return 'ok' if lo <= ratio <= hi else 'outside-band'


@dataclass
class RunStatistics:
    """Per-transmission fairness and utility series of every scheme.

    Attributes
    ----------
    jain_per_transmission : dict
        scheme -> array (transmissions,) of Jain indices over gains (NaN
        where undefined or the transmission was infeasible).
    utility_series : dict
        scheme -> array (transmissions, receivers) of utilities (NaN where
        the scheme found no allocation).
    level : float
        confidence level of the intervals.
    """
    jain_per_transmission: dict
    utility_series: dict
    level: float = 0.95

    @property
    def schemes(self) -> list:
        return list(self.utility_series.keys())

    def _estimate(self, samples):
        x = np.asarray(samples, dtype=float)
        x = x[~np.isnan(x)]
        if x.size == 0:
            return MeanEstimate(np.nan, np.nan, self.level, 0)
        if x.size == 1:
            return MeanEstimate(float(x[0]), np.nan, self.level, 1)
        return mean_with_ci(x, self.level)

    def jain_mean(self, scheme: str) -> MeanEstimate:
        return self._estimate(self.jain_per_transmission[scheme])

    def utility_means(self, scheme: str) -> list:
        u = np.atleast_2d(self.utility_series[scheme])
        return [self._estimate(u[:, r]) for r in range(u.shape[1])]

    def total_utility(self, scheme: str) -> np.ndarray:
        """Total utility per transmission (NaN if any receiver is NaN)."""
        return np.sum(np.atleast_2d(self.utility_series[scheme]), axis=1)

    def efficiency_ratio(self, scheme: str = 'proposed',
                         reference: str = 'maxutil') -> float:
        """Ratio of mean total utilities over transmissions where both
        schemes found an allocation.
        """
        if scheme not in self.utility_series or \
                reference not in self.utility_series:
            return np.nan
        a, b = self.total_utility(scheme), self.total_utility(reference)
        ok = ~(np.isnan(a) | np.isnan(b))
        if not ok.any() or np.sum(b[ok]) == 0:
            return np.nan
        return float(np.sum(a[ok])/np.sum(b[ok]))
