"""Application utility functions.

Every utility is the product of a frame-delivery factor ``1 - FER`` and a
rate term in [0, 1] that depends on the PHY rate of the selected MCS:

- ``voip``: weighted indicator of the quality level containing the rate;
- ``video``: sigmoid ``1/(1 + (1/eps - 1) exp(-beta rate))`` with
  ``beta = 2 ln(1/eps - 1)/RATE_max``;
- ``file``: ``log(rate + 1)/log(RATE_max + 1)``, with rates in units of
  `rate_unit` (Mbps by default);
- ``gaming``: the video sigmoid with ``gamma = 1/sum(t_i/gamma_i)``
  combining the intrinsic rates of N applications.

All rates are in bits per second.
"""

__all__ = ['UtilitySpec', 'build_utility_spec', 'eval_utility',
           'rate_utility', 'utility_spec_from_config', 'UTILITY_KINDS',
           'DEFAULT_CALIBRATIONS', 'DEFAULT_U_MIN']

import numpy as np
import logging
from dataclasses import dataclass, asdict
from .errors import InvalidCalibrationError, InvalidArgumentError
from .utils import try_parse

UTILITY_KINDS = ('voip', 'video', 'file', 'gaming')

# VoIP levels are a measured calibration; the other rows are shipped
# defaults, not measurements
DEFAULT_CALIBRATIONS = {
    'voip': dict(levels=((21e3, 32e3), (32e3, 88e3), (88e3, np.inf)),
                 scales=(0.92, 0.95, 1.)),
    'video': dict(epsilon=0.05, rate_max=40e6, rate_min=6.5e6),
    'file': dict(rate_max=78e6, rate_unit=1e6),
    'gaming': dict(epsilon=0.05, shares=(0.5, 0.5),
                   rate_maxes=(10e6, 30e6)),
}

DEFAULT_U_MIN = {'voip': 0.7, 'video': 0.5, 'file': 0.4, 'gaming': 0.4}

_PARAMETERS = {
    'voip': ('levels', 'scales'),
    'video': ('epsilon', 'rate_max', 'rate_min'),
    'file': ('rate_max', 'rate_unit'),
    'gaming': ('epsilon', 'shares', 'rate_maxes'),
}


@dataclass(frozen=True)
class UtilitySpec:
    """Calibrated utility function of one receiver.

    Only the fields relevant to `kind` are set; derived constants (`beta`,
    `gamma`, `gammas`) are filled in by :func:`build_utility_spec`.
    """
    kind: str
    u_min: float
    levels: tuple = ()
    scales: tuple = ()
    epsilon: float = None
    rate_max: float = None
    rate_min: float = None
    rate_unit: float = None
    shares: tuple = ()
    rate_maxes: tuple = ()
    beta: float = None
    gamma: float = None
    gammas: tuple = ()

    @property
    def level_count(self) -> int:
        return len(self.levels)

    def calibration(self) -> dict:
        """Raw calibration parameters (the inputs of
        :func:`build_utility_spec`).
        """
        d = asdict(self)
        return {k: d[k] for k in _PARAMETERS[self.kind]}

    def __call__(self, rate, fer=0.):
        return eval_utility(self, rate, fer)


def _fail(field, message):
    raise InvalidCalibrationError(field, message)


def _sigmoid_slope(epsilon, rate_max, field='rate_max'):
    if not 0 < epsilon < 0.5:
        _fail('epsilon', f"must be in (0, 0.5), got {epsilon}")
    if not 0 < rate_max < np.inf:
        _fail(field, f"must be positive and finite, got {rate_max}")
    return 2*np.log(1/epsilon - 1)/rate_max


def build_utility_spec(kind: str, u_min: float = None,
                       **params) -> UtilitySpec:
    """Validate a calibration and compute its derived constants.

    Arguments
    ---------
    kind : str
        one of 'voip', 'video', 'file' or 'gaming'.
    u_min : float
        minimum acceptable utility of the receiver (default: the shipped
        value of `kind`).
    params : dict
        calibration parameters; missing ones take the values in
        `DEFAULT_CALIBRATIONS`.

    Returns
    -------
    spec : UtilitySpec
    """
    kind = str(kind).strip().lower()
    if kind not in UTILITY_KINDS:
        _fail('kind', f"unknown utility kind {kind!r}; "
                      f"choose from {UTILITY_KINDS}")
    unknown = set(params) - set(_PARAMETERS[kind])
    if unknown:
        _fail(sorted(unknown)[0], f"not a parameter of {kind} utilities")
    if u_min is None:
        u_min = DEFAULT_U_MIN[kind]
    if not 0 <= u_min <= 1:
        _fail('u_min', f"must be in [0, 1], got {u_min}")
    p = dict(DEFAULT_CALIBRATIONS[kind])
    p.update({k: v for k, v in params.items() if v is not None})

    if kind == 'voip':
        # an open upper edge may be written as None
        levels = tuple((float(lo), np.inf if hi is None else float(hi))
                       for lo, hi in p['levels'])
        scales = tuple(float(a) for a in p['scales'])
        if not levels:
            _fail('levels', "need at least one quality level")
        if len(scales) != len(levels):
            _fail('scales', f"expected {len(levels)} scales, got "
                            f"{len(scales)}")
        for (lo, hi), nxt in zip(levels, levels[1:] + ((np.inf, None),)):
            if not 0 <= lo < hi or hi > nxt[0]:
                _fail('levels', "must be disjoint, nonempty and ascending")
        if not 0 < scales[0] or any(b < a for a, b in zip(scales,
                                                         scales[1:])) \
                or scales[-1] > 1:
            _fail('scales', "must satisfy 0 < a_1 <= ... <= a_L <= 1")
        return UtilitySpec(kind, float(u_min), levels=levels, scales=scales)

    if kind == 'video':
        epsilon, rate_max = float(p['epsilon']), float(p['rate_max'])
        beta = _sigmoid_slope(epsilon, rate_max)
        rate_min = p.get('rate_min')
        if rate_min is not None and not 0 <= rate_min <= rate_max:
            _fail('rate_min', f"must be in [0, rate_max], got {rate_min}")
        return UtilitySpec(kind, float(u_min), epsilon=epsilon,
                           rate_max=rate_max, rate_min=rate_min, beta=beta)

    if kind == 'file':
        rate_max, unit = float(p['rate_max']), float(p['rate_unit'])
        if not 0 < rate_max < np.inf:
            _fail('rate_max', f"must be positive and finite, got {rate_max}")
        if not unit > 0:
            _fail('rate_unit', f"must be positive, got {unit}")
        return UtilitySpec(kind, float(u_min), rate_max=rate_max,
                           rate_unit=unit)

    # gaming
    epsilon = float(p['epsilon'])
    shares = tuple(float(t) for t in np.atleast_1d(p['shares']))
    rate_maxes = tuple(float(r) for r in np.atleast_1d(p['rate_maxes']))
    if len(shares) != len(rate_maxes) or not shares:
        _fail('shares', "need one traffic share per application rate")
    if any(t < 0 for t in shares) or abs(sum(shares) - 1) > 1e-9:
        _fail('shares', f"must be nonnegative and sum to 1, got {shares}")
    gammas = tuple(_sigmoid_slope(epsilon, r, 'rate_maxes')
                   for r in rate_maxes)
    gamma = 1/sum(t/g for t, g in zip(shares, gammas))
    return UtilitySpec(kind, float(u_min), epsilon=epsilon, shares=shares,
                       rate_maxes=rate_maxes,
                       rate_max=float(np.dot(shares, rate_maxes)),
                       gamma=gamma, gammas=gammas)


def rate_utility(spec: UtilitySpec, rate):
    """Rate term of the utility (the utility of a frame-error-free link),
    clipped to [0, 1].
    """
    rate = np.asarray(rate, dtype=float)
    if np.any(rate < 0):
        raise InvalidArgumentError("rate must be nonnegative")
    if spec.kind == 'voip':
        u = np.zeros_like(rate)
        for (lo, hi), a in zip(spec.levels, spec.scales):
            u = u + a*((rate >= lo) & (rate < hi))
    elif spec.kind == 'file':
        u = np.log1p(rate/spec.rate_unit)/np.log1p(spec.rate_max/spec.rate_unit)
    else:
        slope = spec.beta if spec.kind == 'video' else spec.gamma
        u = 1/(1 + (1/spec.epsilon - 1)*np.exp(-slope*rate))
    return np.clip(u, 0, 1)


def eval_utility(spec: UtilitySpec, rate, fer=0.):
    """Utility of receiving at PHY rate `rate` (bits/s) with frame error
    rate `fer`; broadcasts over array inputs.

    Returns
    -------
    utility : float, array
        value in [0, 1], nondecreasing in rate and nonincreasing in fer.
    """
    fer = np.asarray(fer, dtype=float)
    if np.any(fer < 0) or np.any(fer > 1):
        raise InvalidArgumentError("FER must be in [0, 1]")
    u = (1 - fer)*rate_utility(spec, rate)
    return float(u) if np.ndim(u) == 0 else u


def utility_spec_from_config(section) -> UtilitySpec:
    """Build a spec from a ``[receiver-N]`` config section (or dict of
    strings), e.g. ``kind = video``, ``u_min = 0.5``, ``rate_max = 40e6``.
    """
    opts = {k: try_parse(v) if isinstance(v, str) else v
            for k, v in dict(section).items()}
    if 'kind' not in opts:
        _fail('kind', "receiver section has no utility kind")
    kind = opts.pop('kind')
    u_min = opts.pop('u_min', None)
    spec = build_utility_spec(kind, u_min, **opts)
    logging.info(f"{spec.kind} utility with u_min = {spec.u_min}")
    return spec
