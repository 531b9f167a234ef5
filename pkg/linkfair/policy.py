"""Per-receiver link adaptation policy tables.

A policy is a (transmit power, MCS) pair together with its predicted frame
error rate and the receiver's utility. For every power level of a grid the
utility-maximizing MCS is selected; the resulting candidates are then pruned
to a staircase in which both power and utility strictly increase.
"""

__all__ = ['PolicyTuple', 'PolicyTable', 'power_grid', 'unit_snr',
           'select_mcs', 'build_policy_table', 'build_policy_tables',
           'write_policy_tables', 'read_policy_tables', 'POLICY_COLUMNS']

import numpy as np
import pandas as pd
import logging
import os
from dataclasses import dataclass
from .channel import effective_gains
from .errors import InvalidConfigError, InvalidArgumentError
from .utility import eval_utility

POLICY_COLUMNS = ['receiver', 'power', 'mcs', 'fer', 'utility', 'u_min']


@dataclass(frozen=True)
class PolicyTuple:
    """One link adaptation policy of a receiver.

    Attributes
    ----------
    power : float
        transmit power in watts (upper edge of its grid range).
    mcs_index : int
        1-based MCS index.
    fer_eff : float
        predicted frame error rate upper bound.
    utility : float
        receiver utility of the policy.
    """
    power: float
    mcs_index: int
    fer_eff: float
    utility: float

    def __post_init__(self):
        if not self.power >= 0:
            raise InvalidArgumentError(f"negative power: {self.power}")
        if not 0 <= self.fer_eff <= 1:
            raise InvalidArgumentError(f"FER out of range: {self.fer_eff}")
        if not 0 <= self.utility <= 1:
            raise InvalidArgumentError(f"utility out of range: "
                                       f"{self.utility}")


@dataclass(frozen=True)
class PolicyTable:
    """Calibrated policies of one receiver, sorted by strictly increasing
    power with nondecreasing utility.

    Attributes
    ----------
    receiver : int
        0-based receiver index.
    tuples : tuple
        the :class:`PolicyTuple` entries.
    u_min : float
        minimum acceptable utility of the receiver.
    """
    receiver: int
    tuples: tuple
    u_min: float = 0.

    def __post_init__(self):
        object.__setattr__(self, 'tuples', tuple(self.tuples))
        p = self.powers
        u = self.utilities
        if np.any(np.diff(p) <= 0):
            raise InvalidConfigError(f"policy table of receiver "
                                     f"{self.receiver} is not sorted by "
                                     "strictly increasing power")
        if np.any(np.diff(u) < 0):
            raise InvalidConfigError(f"policy table of receiver "
                                     f"{self.receiver} has decreasing "
                                     "utility")

    def __len__(self):
        return len(self.tuples)

    def __iter__(self):
        return iter(self.tuples)

    def __getitem__(self, i):
        return self.tuples[i]

    @property
    def length(self) -> int:
        return len(self.tuples)

    @property
    def powers(self) -> np.ndarray:
        return np.array([t.power for t in self.tuples], dtype=float)

    @property
    def utilities(self) -> np.ndarray:
        return np.array([t.utility for t in self.tuples], dtype=float)

    @property
    def gains(self) -> np.ndarray:
        """Utility gaps above the receiver's minimum utility."""
        return self.utilities - self.u_min

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(self.receiver, t.power, t.mcs_index, t.fer_eff, t.utility,
              self.u_min) for t in self.tuples], columns=POLICY_COLUMNS)


def power_grid(total_power: float, levels: int = 32, span_db: float = 30.,
               lattice: int = 4096) -> np.ndarray:
    """Power levels uniformly spaced in decibels over
    ``[total_power 10^(-span_db/10), total_power]``.

    With `lattice`, levels are rounded to integer multiples of
    ``total_power/lattice`` (at least one step) and de-duplicated, so the
    grid may have fewer than `levels` points.

    Returns
    -------
    grid : np.ndarray
        strictly increasing powers in watts, ending at `total_power`.
    """
    if not total_power > 0:
        raise InvalidConfigError(f"total power must be positive, got "
                                 f"{total_power}")
    if int(levels) != levels or levels < 1:
        raise InvalidConfigError(f"number of power levels must be a "
                                 f"positive integer, got {levels}")
    if not span_db >= 0:
        raise InvalidConfigError(f"invalid power span: {span_db} dB")
    if levels == 1:
        return np.array([float(total_power)])
    db = np.linspace(-span_db, 0, int(levels))
    grid = total_power*10**(db/10)
    if lattice:
        step = total_power/lattice
        grid = np.maximum(np.round(grid/step), 1)*step
        grid[-1] = total_power
    return np.unique(grid)


def unit_snr(channel, weights) -> np.ndarray:
    """Per-subcarrier SNR of every receiver at unit transmit power,
    ``|h.w|^2/sigma^2``, with shape (receivers, subcarriers).
    """
    return effective_gains(channel, weights)/channel.noise_variance


def _evaluate(powers, snr_per_watt, mcs_table, utility_spec):
    """FER and utility of every (power, MCS) pair, shape (powers, MCS)."""
    snr = np.asarray(powers, dtype=float)[:, None]*snr_per_watt[None, :]
    fer = np.stack([mcs_table.fer(snr, m) for m in mcs_table], axis=-1)
    util = eval_utility(utility_spec, mcs_table.phy_rates[None, :], fer)
    return fer, np.asarray(util)


def select_mcs(power: float, receiver_snr, mcs_table, utility_spec):
    """Utility-maximizing MCS at a given power.

    Arguments
    ---------
    power : float
        transmit power in watts.
    receiver_snr : array
        per-subcarrier SNR of the receiver at unit power.
    mcs_table : McsTable
        candidate schemes.
    utility_spec : UtilitySpec
        utility of the receiver.

    Returns
    -------
    mcs_index : int
        1-based index of the best MCS; ties go to the lower index.
    fer_eff : float
        predicted FER of that MCS.
    """
    if not power >= 0:
        raise InvalidArgumentError(f"negative power: {power}")
    snr = np.atleast_1d(np.asarray(receiver_snr, dtype=float))
    fer, util = _evaluate([power], snr, mcs_table, utility_spec)
    best = int(np.argmax(util[0]))
    return mcs_table.entries[best].index, float(fer[0, best])


def build_policy_table(receiver: int, channel, weights, mcs_table,
                       utility_spec, power_grid, min_utility_step: float = 0.,
                       total_power: float = None) -> PolicyTable:
    """Calibrate the policy table of one receiver.

    Each grid power gets its utility-maximizing MCS (see
    :func:`select_mcs`); a candidate is kept only if its utility exceeds
    that of the last kept (cheaper) candidate by more than
    `min_utility_step`, so the table is a strict staircase.

    Arguments
    ---------
    receiver : int
        0-based receiver index.
    channel : ChannelRealization
        channel of the transmission.
    weights : BeamformingWeights
        beamforming weights of the transmission.
    mcs_table : McsTable
        candidate schemes.
    utility_spec : UtilitySpec
        utility of the receiver.
    power_grid : list
        strictly increasing powers in watts.
    min_utility_step : float
        minimum utility increment between kept tuples (default 0).
    total_power : float
        if given, every grid power must not exceed it.

    Returns
    -------
    table : PolicyTable
    """
    grid = np.asarray(power_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidConfigError("power grid is empty")
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise InvalidConfigError("power grid must be nonnegative and "
                                 "strictly increasing")
    if total_power is not None and grid[-1] > total_power:
        raise InvalidConfigError(f"power grid exceeds the budget of "
                                 f"{total_power} W")
    if min_utility_step < 0:
        raise InvalidConfigError("utility step must be nonnegative")
    if not 0 <= receiver < channel.receivers:
        raise InvalidArgumentError(f"no receiver {receiver}")

    snr = unit_snr(channel, weights)[receiver]
    fer, util = _evaluate(grid, snr, mcs_table, utility_spec)
    best = np.argmax(util, axis=-1)
    rows = np.arange(grid.size)
    fer, util = fer[rows, best], util[rows, best]

    tuples = []
    for p, m, f, u in zip(grid, best, fer, util):
        if tuples and not u > tuples[-1].utility + min_utility_step:
            continue
        tuples.append(PolicyTuple(float(p), mcs_table.entries[m].index,
                                  float(f), float(u)))
    return PolicyTable(receiver, tuple(tuples), utility_spec.u_min)


def build_policy_tables(channel, weights, mcs_table, utility_specs,
                        power_grid, min_utility_step: float = 0.,
                        total_power: float = None) -> list:
    """Policy tables of all receivers; see :func:`build_policy_table`."""
    if len(utility_specs) != channel.receivers:
        raise InvalidConfigError(f"expected {channel.receivers} utility "
                                 f"specs, got {len(utility_specs)}")
    return [build_policy_table(r, channel, weights, mcs_table, spec,
                               power_grid, min_utility_step, total_power)
            for r, spec in enumerate(utility_specs)]


def write_policy_tables(tables, path: str) -> None:
    """Export policy tables to CSV (one row per tuple)."""
    frame = pd.concat([t.to_frame() for t in tables], ignore_index=True)
    frame.to_csv(path, index=False, float_format='%.17g')
    logging.info(f"wrote {len(frame)} policies to {path}")


def read_policy_tables(path: str) -> list:
    """Read policy tables written by :func:`write_policy_tables`."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"file not found: {path}")
    frame = pd.read_csv(path)
    missing = set(POLICY_COLUMNS) - set(frame.columns)
    if missing:
        raise InvalidConfigError(f"policy file {path} lacks columns "
                                 f"{sorted(missing)}")
    tables = []
    for receiver, rows in frame.groupby('receiver', sort=True):
        tuples = tuple(PolicyTuple(float(r.power), int(r.mcs), float(r.fer),
                                   float(r.utility))
                       for r in rows.itertuples(index=False))
        tables.append(PolicyTable(int(receiver), tuples,
                                  float(rows['u_min'].iloc[0])))
    return tables
