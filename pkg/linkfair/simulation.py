"""Batch simulation of downlink multi-user transmissions.

Every transmission draws a channel, computes zero-forcing weights, calibrates
the policy table of each receiver and runs the requested allocation schemes;
gains, utilities and fairness indices are collected into a
:class:`SimReport`, which can be written to CSV and JSON files.
"""

__all__ = ['SimConfig', 'SimReport', 'TransmissionRecord',
           'simulate_transmission', 'run_simulation', 'emit_report',
           'scan_report_csv', 'transmission_seed', 'REPORT_COLUMNS',
           'DEFAULT_PATHLOSS', 'DEFAULT_RECEIVER_KINDS']

import numpy as np
import pandas as pd
import configparser
import logging
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from . import utils
from .allocator import (SCHEMES, PACINGS, BUDGET_RTOL, find_min_policies,
                        maxmin_allocate, epa_allocate, max_utility_allocate,
                        infeasible_result)
from .channel import (generate_channel, zf_weights, read_channel_trace,
                      MAX_CONDITION)
from .codec import McsTable
from .errors import (InvalidConfigError, UnsupportedGeometryError,
                     SingularChannelError, StarvationError,
                     InfeasibleBudgetError, ReportIOError)
from .metrics import RunStatistics, gain_fairness, efficiency_flag
from .policy import power_grid, build_policy_tables
from .utility import (UtilitySpec, build_utility_spec,
                      utility_spec_from_config)

REPORT_COLUMNS = ['transmission', 'scheme', 'receiver', 'power', 'mcs', 'fer',
                  'utility', 'gain', 'jain', 'feasible', 'u_min']

DEFAULT_PATHLOSS = (1.0, 0.8, 0.6, 0.5)

# receiver i runs application i
DEFAULT_RECEIVER_KINDS = ('voip', 'video', 'file', 'gaming')

# config section -> SimConfig fields it holds
_SECTIONS = {
    'channel': ('num_tx', 'receivers', 'subcarriers', 'total_subcarriers',
                'bandwidth', 'carrier', 'noise_variance', 'correlation',
                'pathloss', 'max_condition'),
    'power': ('total_power', 'levels', 'span_db', 'lattice', 'utility_step'),
    'codec': ('mcs_path', 'frame_length'),
    'run': ('transmissions', 'schemes', 'seed', 'workers', 'channel_trace',
            'pacing'),
}
# config keys that differ from field names
_ALIASES = {('codec', 'path'): 'mcs_path'}

_INT_FIELDS = ('num_tx', 'receivers', 'subcarriers', 'total_subcarriers',
               'levels', 'lattice', 'transmissions', 'seed', 'workers',
               'frame_length')


def transmission_seed(seed: int, transmission: int) -> np.random.SeedSequence:
    """Independent seed of one transmission, derived from the master seed."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(transmission,))


@dataclass
class SimConfig:
    """Settings of a simulation run.

    Receivers are 0-based; the utility of receiver ``r`` is configured in
    section ``[receiver-{r+1}]``. Powers are in watts, rates and bandwidths
    in Hz or bits per second.

    The default budget SNR ``total_power/noise_variance`` is 30 dB: the
    budget then usually binds before every receiver saturates, which is
    where the allocation schemes differ.
    """
    num_tx: int = 4
    receivers: int = 4
    subcarriers: int = 52
    total_subcarriers: int = 64
    bandwidth: float = 20e6
    carrier: float = 5.25e9
    noise_variance: float = 1e-4
    correlation: float = 0.9
    pathloss: tuple = None
    max_condition: float = MAX_CONDITION
    total_power: float = 0.1
    levels: int = 32
    span_db: float = 30.
    lattice: int = 4096
    utility_step: float = 0.005
    mcs_path: str = None
    frame_length: int = None
    utility_specs: tuple = None
    transmissions: int = 2000
    schemes: tuple = SCHEMES
    seed: int = 0
    workers: int = 1
    channel_trace: str = None
    pacing: str = 'current'

    def __post_init__(self):
        for k in _INT_FIELDS:
            v = getattr(self, k)
            if v is not None:
                if int(v) != v:
                    raise InvalidConfigError(f"{k} must be an integer, got "
                                             f"{v}")
                setattr(self, k, int(v))
        if self.receivers < 1 or self.num_tx < 1 or self.subcarriers < 1:
            raise InvalidConfigError("need at least one antenna, receiver "
                                     "and subcarrier")
        if self.receivers > self.num_tx:
            raise UnsupportedGeometryError(f"{self.receivers} receivers "
                                           f"exceed {self.num_tx} antennas")
        if self.subcarriers > self.total_subcarriers:
            raise InvalidConfigError("more data subcarriers than subcarriers")
        if not self.noise_variance > 0:
            raise InvalidConfigError("noise variance must be positive")
        if not 0 <= self.correlation < 1:
            raise InvalidConfigError("correlation must be in [0, 1)")
        if not self.total_power > 0:
            raise InvalidConfigError("total power must be positive")
        if self.transmissions < 1:
            raise InvalidConfigError("need at least one transmission")
        if self.workers < 1:
            raise InvalidConfigError("need at least one worker")
        if self.pacing not in PACINGS:
            raise InvalidConfigError(f"unknown pacing {self.pacing!r}")

        if self.pathloss is None:
            self.pathloss = tuple(DEFAULT_PATHLOSS[r % len(DEFAULT_PATHLOSS)]
                                  for r in range(self.receivers))
        self.pathloss = tuple(float(a) for a in np.atleast_1d(self.pathloss))
        if len(self.pathloss) != self.receivers or \
                any(a <= 0 for a in self.pathloss):
            raise InvalidConfigError(f"need {self.receivers} positive "
                                     f"pathloss scales, got {self.pathloss}")

        if isinstance(self.schemes, str):
            self.schemes = utils.parse_list(self.schemes)
        schemes = tuple(dict.fromkeys(str(s).strip().lower()
                                      for s in self.schemes))
        unknown = set(schemes) - set(SCHEMES)
        if unknown:
            raise InvalidConfigError(f"unknown schemes {sorted(unknown)}; "
                                     f"choose from {SCHEMES}")
        self.schemes = schemes

        if self.utility_specs is None:
            kinds = DEFAULT_RECEIVER_KINDS
            self.utility_specs = tuple(build_utility_spec(kinds[r % len(kinds)])
                                       for r in range(self.receivers))
        self.utility_specs = tuple(self.utility_specs)
        if len(self.utility_specs) != self.receivers or \
                not all(isinstance(s, UtilitySpec)
                        for s in self.utility_specs):
            raise InvalidConfigError(f"need a utility spec for each of the "
                                     f"{self.receivers} receivers")

    @cached_property
    def mcs_table(self) -> McsTable:
        return McsTable.from_config(self.mcs_path,
                                    frame_length=self.frame_length)

    @cached_property
    def power_grid(self) -> np.ndarray:
        return power_grid(self.total_power, self.levels, self.span_db,
                          self.lattice)

    @property
    def u_min(self) -> tuple:
        return tuple(s.u_min for s in self.utility_specs)

    def prepare(self) -> None:
        """Load the MCS table and power grid (so that worker processes
        receive them instead of recomputing code spectra).
        """
        logging.info(f"{len(self.mcs_table)} MCS entries, "
                     f"{len(self.power_grid)} power levels up to "
                     f"{self.total_power} W")

    @classmethod
    def from_config(cls, config_input, **overrides):
        """Load settings from a configuration file or `ConfigParser`.

        Arguments
        ---------
        config_input : str, ConfigParser
            configuration to read.
        overrides : dict
            field values taking precedence over the file (None values are
            ignored).

        Returns
        -------
        config : SimConfig
        """
        config = utils.load_config(config_input)
        kws = {}
        for section in config.sections():
            if section.startswith('receiver-'):
                continue
            if section not in _SECTIONS:
                logging.warning(f"ignoring unknown config section: {section}")
                continue
            for key, value in config[section].items():
                name = _ALIASES.get((section, key), key)
                if name not in _SECTIONS[section]:
                    logging.warning(f"unknown option {key} in [{section}]")
                    continue
                kws[name] = utils.try_parse(value)

        receivers = utils.get_receiver_sections(config)
        if receivers:
            n = int(kws.get('receivers', len(receivers)))
            if sorted(receivers) != list(range(1, n + 1)):
                raise InvalidConfigError(f"need sections receiver-1 to "
                                         f"receiver-{n}, found "
                                         f"{list(receivers.values())}")
            kws['utility_specs'] = tuple(
                utility_spec_from_config(config[receivers[i]])
                for i in range(1, n + 1))

        for k in ('mcs_path', 'channel_trace'):
            if kws.get(k) in ('', 'none', 'None'):
                kws[k] = None
        if 'schemes' in kws:
            kws['schemes'] = utils.parse_list(config['run']['schemes'])
        kws.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kws)

    def to_config(self, path=None) -> configparser.ConfigParser:
        """Create configuration to reproduce this run with
        :meth:`SimConfig.from_config`.

        Arguments
        ---------
        path : str
            optional destination path for the configuration file.

        Returns
        -------
        config : configparser.ConfigParser
        """
        config = configparser.ConfigParser()
        for section, names in _SECTIONS.items():
            config[section] = {}
            for name in names:
                value = getattr(self, name)
                if value is None:
                    continue
                key = {v: k[1] for k, v in _ALIASES.items()}.get(name, name)
                if name == 'schemes':
                    config[section][key] = ', '.join(value)
                elif isinstance(value, (tuple, list)):
                    config[section][key] = utils.form_opt(list(value))
                else:
                    config[section][key] = str(value)
        for r, spec in enumerate(self.utility_specs):
            section = f'receiver-{r + 1}'
            config[section] = {'kind': spec.kind, 'u_min': str(spec.u_min)}
            for k, v in spec.calibration().items():
                if v is None:
                    continue
                if k == 'levels':
                    v = tuple((lo, None if np.isinf(hi) else hi)
                              for lo, hi in v)
                config[section][k] = utils.form_opt(v) if isinstance(
                    v, (tuple, list)) else str(v)
        if path is not None:
            with open(path, 'w') as f:
                config.write(f)
        return config

    @property
    def settings(self) -> dict:
        config = self.to_config()
        return {section: dict(config[section])
                for section in config.sections()}


@dataclass
class TransmissionRecord:
    """Allocations of all schemes for one transmission.

    Attributes
    ----------
    transmission : int
        0-based transmission index.
    results : dict
        scheme -> :class:`AllocationResult`.
    jain : dict
        scheme -> Jain index over gains (NaN if undefined).
    status : str
        'ok', or 'singular' if the channel could not be inverted.
    """
    transmission: int
    results: dict
    jain: dict
    status: str = 'ok'

    @property
    def excluded(self) -> bool:
        """Whether the transmission is left out of fairness averages (no
        max-min fair allocation exists).
        """
        if self.status != 'ok':
            return True
        proposed = self.results.get('proposed')
        return proposed is not None and not proposed.feasible


def _allocate(scheme, tables, config):
    if scheme == 'proposed':
        try:
            filtered, minima = find_min_policies(tables, None,
                                                 config.total_power)
        except StarvationError as e:
            return infeasible_result(scheme, config.u_min, config.total_power,
                                     f'starvation: {e}')
        except InfeasibleBudgetError as e:
            return infeasible_result(scheme, config.u_min, config.total_power,
                                     f'budget: {e}')
        return maxmin_allocate(filtered, minima, config.total_power,
                               pacing=config.pacing)
    elif scheme == 'epa':
        return epa_allocate(tables, config.total_power)
    return max_utility_allocate(tables, config.total_power)


def simulate_transmission(config: SimConfig, transmission: int,
                          channel=None) -> TransmissionRecord:
    """Run every scheme of `config` on one transmission.

    Arguments
    ---------
    config : SimConfig
        run settings.
    transmission : int
        transmission index; selects the channel seed.
    channel : ChannelRealization, None
        channel to use instead of a generated one.

    Returns
    -------
    record : TransmissionRecord
    """
    if channel is None:
        channel = generate_channel(config.num_tx, config.receivers,
                                   config.subcarriers, config.noise_variance,
                                   config.correlation,
                                   transmission_seed(config.seed,
                                                     transmission),
                                   config.pathloss)
    if not config.schemes:
        return TransmissionRecord(transmission, {}, {})
    try:
        weights = zf_weights(channel, config.max_condition)
    except SingularChannelError as e:
        logging.warning(f"transmission {transmission}: {e}")
        results = {s: infeasible_result(s, config.u_min, config.total_power,
                                        f"singular: {e}")
                   for s in config.schemes}
        return TransmissionRecord(transmission, results,
                                  {s: np.nan for s in config.schemes},
                                  'singular')
    tables = build_policy_tables(channel, weights, config.mcs_table,
                                 config.utility_specs, config.power_grid,
                                 config.utility_step, config.total_power)
    results = {s: _allocate(s, tables, config) for s in config.schemes}
    jain = {s: gain_fairness(r.gains) for s, r in results.items()}
    return TransmissionRecord(transmission, results, jain)


def _simulate_star(args):
    return simulate_transmission(*args)


@dataclass
class SimReport:
    """Outcome of :func:`run_simulation`.

    Attributes
    ----------
    config : SimConfig
        settings of the run.
    records : list
        :class:`TransmissionRecord` per transmission, in order.
    statistics : RunStatistics
        fairness and utility series (excluded transmissions are NaN in the
        Jain series).
    """
    config: SimConfig
    records: list
    statistics: RunStatistics = field(init=False)

    def __post_init__(self):
        schemes = self.config.schemes
        jain = {s: np.array([np.nan if r.excluded else r.jain[s]
                             for r in self.records]) for s in schemes}
        util = {s: np.array([r.results[s].utilities for r in self.records]
                            ).reshape(len(self.records), -1)
                for s in schemes}
        self.statistics = RunStatistics(jain, util)

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def infeasible(self) -> dict:
        """Number of transmissions without an allocation, by scheme and
        reason.
        """
        counts = {}
        for rec in self.records:
            for s, res in rec.results.items():
                if res.note:
                    reason = res.note.split(':', 1)[0]
                    counts.setdefault(s, {}).setdefault(reason, 0)
                    counts[s][reason] += 1
        return counts

    @property
    def excluded(self) -> int:
        return sum(r.excluded for r in self.records)

    @property
    def efficiency_ratio(self) -> float:
        return self.statistics.efficiency_ratio('proposed', 'maxutil')

    @property
    def efficiency_flag(self) -> str:
        if not {'proposed', 'maxutil'} <= set(self.config.schemes):
            return 'not-computed'
        return efficiency_flag(self.efficiency_ratio)

    def to_frame(self) -> pd.DataFrame:
        """Per-transmission rows with columns `REPORT_COLUMNS`."""
        frames = []
        for rec in self.records:
            for s in self.config.schemes:
                res = rec.results[s]
                df = res.to_frame()
                df.insert(0, 'scheme', s)
                df.insert(0, 'transmission', rec.transmission)
                df['jain'] = rec.jain[s]
                df['feasible'] = res.feasible
                frames.append(df)
        if not frames:
            return pd.DataFrame(columns=REPORT_COLUMNS)
        frame = pd.concat(frames, ignore_index=True)[REPORT_COLUMNS]
        frame['mcs'] = frame['mcs'].astype('Int64')
        return frame

    def summary(self) -> dict:
        stats = self.statistics
        schemes = {}
        for s in self.config.schemes:
            schemes[s] = {
                'jain': stats.jain_mean(s).as_dict(),
                'jain_series': stats.jain_per_transmission[s].tolist(),
                'utilities': [m.as_dict() for m in stats.utility_means(s)],
                'infeasible': self.infeasible.get(s, {}),
            }
        return {
            'config': self.config.settings,
            'seed': self.seed,
            'transmissions': len(self.records),
            'excluded': self.excluded,
            'singular': sum(r.status == 'singular' for r in self.records),
            'schemes': schemes,
            'efficiency_ratio': self.efficiency_ratio,
            'efficiency_flag': self.efficiency_flag,
        }


def run_simulation(config: SimConfig, progress: bool = False) -> SimReport:
    """Simulate `config.transmissions` transmissions.

    Transmission ``t`` uses the seed ``transmission_seed(config.seed, t)``
    (or channel ``t`` of `config.channel_trace`), so results do not depend
    on the number of workers.

    Arguments
    ---------
    config : SimConfig
        run settings.
    progress : bool
        show a progress bar.

    Returns
    -------
    report : SimReport
    """
    n = config.transmissions
    channels = [None]*n
    if config.channel_trace:
        trace = read_channel_trace(config.channel_trace)
        c = trace[0]
        if (c.receivers, c.num_data_subcarriers, c.num_tx) != \
                (config.receivers, config.subcarriers, config.num_tx):
            raise InvalidConfigError(
                f"trace dimensions {c.coeffs.shape} do not match the "
                f"configured ({config.receivers}, {config.subcarriers}, "
                f"{config.num_tx})")
        if len(trace) < n:
            logging.warning(f"trace holds only {len(trace)} transmissions")
            n = len(trace)
        channels = trace[:n]

    logging.info(f"running {n} transmissions with schemes "
                 f"{list(config.schemes)} (seed {config.seed})")
    config.prepare()
    tqdm = utils.get_tqdm(progress)
    tasks = [(config, t, channels[t]) for t in range(n)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunk = max(1, n // (8*config.workers))
            records = list(tqdm(pool.map(_simulate_star, tasks,
                                         chunksize=chunk), total=n))
    else:
        records = [_simulate_star(task) for task in tqdm(tasks)]
    records.sort(key=lambda r: r.transmission)

    report = SimReport(config, records)
    if report.excluded:
        logging.warning(f"{report.excluded} of {n} transmissions have no "
                        "max-min fair allocation; excluded from fairness "
                        "averages")
    flag = report.efficiency_flag
    if flag == 'outside-band':
        logging.warning(f"efficiency ratio {report.efficiency_ratio:.3f} "
                        "outside the expected band")
    elif flag == 'failed':
        logging.error(f"efficiency ratio {report.efficiency_ratio:.3f} "
                      "below the acceptable floor")
    return report


def emit_report(report: SimReport, out_dir: str,
                formats=('csv', 'json')) -> dict:
    """Write the per-transmission CSV (``transmissions.csv``) and/or the
    JSON summary (``summary.json``) of a report.

    Returns
    -------
    paths : dict
        format -> written path.
    """
    formats = [f.lower() for f in utils.parse_list(formats)]
    unknown = set(formats) - {'csv', 'json'}
    if unknown:
        raise InvalidConfigError(f"unknown report formats {sorted(unknown)}")
    paths = {}
    try:
        os.makedirs(out_dir, exist_ok=True)
        if 'csv' in formats:
            paths['csv'] = os.path.join(out_dir, 'transmissions.csv')
            report.to_frame().to_csv(paths['csv'], index=False)
        if 'json' in formats:
            paths['json'] = os.path.join(out_dir, 'summary.json')
            with open(paths['json'], 'w') as f:
                json.dump(utils.nan_to_none(report.summary()), f, indent=2,
                          sort_keys=True)
                f.write('\n')
    except OSError as e:
        raise ReportIOError(f"unable to write report to {out_dir}: {e}")
    for fmt, path in paths.items():
        logging.info(f"wrote {fmt} report: {path}")
    return paths


def scan_report_csv(path: str, total_power: float,
                    rtol: float = 1e-9) -> pd.DataFrame:
    """Find (transmission, scheme) groups marked feasible whose powers add
    up to more than `total_power` or that select a utility below the
    receiver's minimum.

    Returns
    -------
    violations : pandas.DataFrame
        one row per offending group (empty if none), with columns
        transmission, scheme, power, min_margin.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"file not found: {path}")
    frame = pd.read_csv(path)
    feasible = frame[frame['feasible'].astype(str) == 'True']
    if feasible.empty:
        return pd.DataFrame(columns=['transmission', 'scheme', 'power',
                                     'min_margin'])
    feasible = feasible.assign(margin=feasible['utility'] - feasible['u_min'])
    groups = feasible.groupby(['transmission', 'scheme'], sort=True).agg(
        power=('power', 'sum'), min_margin=('margin', 'min')).reset_index()
    bad = (groups['power'] > total_power*(1 + max(rtol, BUDGET_RTOL))) | \
        (groups['min_margin'] < 0)
    return groups[bad].reset_index(drop=True)
