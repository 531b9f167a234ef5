"""Synthetic multi-antenna downlink channels and zero-forcing beamforming.
"""

__all__ = ['ChannelRealization', 'BeamformingWeights', 'generate_channel',
           'zf_weights', 'subcarrier_snr', 'effective_gains',
           'write_channel_trace', 'read_channel_trace', 'MAX_CONDITION']

import numpy as np
import logging
import os
from dataclasses import dataclass
from parse import parse
from .errors import (InvalidConfigError, UnsupportedGeometryError,
                     SingularChannelError, InvalidArgumentError,
                     TraceFormatError)

# beyond this, zero-forcing power amplification is meaningless
MAX_CONDITION = 1e8

TRACE_HEADER = ("linkfair-trace v1 transmissions={transmissions:d} "
                "receivers={receivers:d} subcarriers={subcarriers:d} "
                "num_tx={num_tx:d} noise_variance={noise_variance:g}")
# noise variance is written with its shortest round-trip repr
_TRACE_HEADER_OUT = TRACE_HEADER.replace('{noise_variance:g}',
                                         '{noise_variance!r}')
TRACE_DTYPE = np.dtype('<f8')


def _frozen(x: np.ndarray) -> np.ndarray:
    x = np.array(x, copy=True)
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class ChannelRealization:
    """Downlink channel from `num_tx` transmit antennas to `receivers`
    single-antenna receivers over `num_data_subcarriers` subcarriers.

    Attributes
    ----------
    coeffs : np.ndarray
        complex array of shape ``(receivers, num_data_subcarriers, num_tx)``
        holding the vectors h_{l_r}.
    noise_variance : float
        noise variance at every receiver in watts.
    """
    coeffs: np.ndarray
    noise_variance: float

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.ndim != 3:
            raise InvalidConfigError("channel coefficients must have shape "
                                     "(receivers, subcarriers, num_tx)")
        if not self.noise_variance > 0:
            raise InvalidConfigError("noise variance must be positive, got "
                                     f"{self.noise_variance}")
        if coeffs.shape[0] > coeffs.shape[2]:
            raise UnsupportedGeometryError(
                f"{coeffs.shape[0]} receivers exceed {coeffs.shape[2]} "
                "transmit antennas")
        object.__setattr__(self, 'coeffs', _frozen(coeffs))
        object.__setattr__(self, 'noise_variance', float(self.noise_variance))

    @property
    def receivers(self) -> int:
        return self.coeffs.shape[0]

    @property
    def num_data_subcarriers(self) -> int:
        return self.coeffs.shape[1]

    @property
    def num_tx(self) -> int:
        return self.coeffs.shape[2]

    def matrix(self, subcarrier: int) -> np.ndarray:
        """Channel matrix (receivers x num_tx) of one subcarrier."""
        return self.coeffs[:, subcarrier, :]


@dataclass(frozen=True)
class BeamformingWeights:
    """Unit-norm beamforming vectors w_{l_r}, stored with the same layout
    as :attr:`ChannelRealization.coeffs`.
    """
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'weights',
                           _frozen(np.asarray(self.weights, dtype=complex)))

    @property
    def receivers(self) -> int:
        return self.weights.shape[0]

    @property
    def num_data_subcarriers(self) -> int:
        return self.weights.shape[1]


def generate_channel(num_tx: int, receivers: int, subcarriers: int,
                     noise_variance: float, correlation: float = 0.,
                     seed=None, pathloss=None) -> ChannelRealization:
    """Draw an i.i.d. Rayleigh channel with first-order autoregressive
    correlation across adjacent subcarriers.

    Arguments
    ---------
    num_tx : int
        number of transmit antennas.
    receivers : int
        number of single-antenna receivers (at most `num_tx`).
    subcarriers : int
        number of data subcarriers.
    noise_variance : float
        noise variance in watts.
    correlation : float
        correlation coefficient between adjacent subcarriers, in [0, 1).
    seed : int, np.random.SeedSequence, np.random.Generator, None
        source of randomness; identical seeds give identical channels.
    pathloss : list, None
        per-receiver amplitude scale factors (default all 1).

    Returns
    -------
    channel : ChannelRealization
    """
    if receivers > num_tx:
        raise UnsupportedGeometryError(f"{receivers} receivers exceed "
                                       f"{num_tx} transmit antennas")
    if not noise_variance > 0:
        raise InvalidConfigError("noise variance must be positive, got "
                                 f"{noise_variance}")
    if not 0 <= correlation < 1:
        raise InvalidConfigError("subcarrier correlation must be in [0, 1), "
                                 f"got {correlation}")
    if receivers < 1 or subcarriers < 1:
        raise InvalidConfigError("need at least one receiver and subcarrier")
    rng = np.random.default_rng(seed)
    shape = (receivers, subcarriers, num_tx)
    # circularly-symmetric, unit variance
    z = (rng.standard_normal(shape) + 1j*rng.standard_normal(shape))/np.sqrt(2)
    h = np.empty(shape, dtype=complex)
    h[:, 0, :] = z[:, 0, :]
    innovation = np.sqrt(1 - correlation**2)
    for l in range(1, subcarriers):  # noqa: E741
        h[:, l, :] = correlation*h[:, l-1, :] + innovation*z[:, l, :]
    if pathloss is not None:
        scale = np.asarray(pathloss, dtype=float)
        if scale.shape != (receivers,):
            raise InvalidConfigError(f"expected {receivers} pathloss scales, "
                                     f"got {scale.shape}")
        h *= scale[:, None, None]
    return ChannelRealization(h, noise_variance)


def zf_weights(channel: ChannelRealization,
               max_condition: float = MAX_CONDITION) -> BeamformingWeights:
    """Zero-forcing beamforming weights: the normalized columns of the right
    pseudo-inverse of each subcarrier's channel matrix, so that
    ``h_j . w_r = 0`` for every ``j != r``.

    Arguments
    ---------
    channel : ChannelRealization
        channel to invert.
    max_condition : float
        largest acceptable condition number of a subcarrier matrix.

    Returns
    -------
    weights : BeamformingWeights
    """
    # (L, R, N) stack of per-subcarrier matrices
    h = np.transpose(channel.coeffs, (1, 0, 2))
    norms = np.linalg.norm(h, axis=-1)
    cond = np.full(h.shape[0], np.inf)
    ok = np.all(norms > 0, axis=-1)
    if np.any(ok):
        cond[ok] = np.linalg.cond(h[ok])
    bad = np.flatnonzero(~(cond <= max_condition))
    if bad.size:
        raise SingularChannelError(int(bad[0]), float(cond[bad[0]]))
    # right pseudo-inverse, (L, N, R): columns are the raw ZF directions
    w = np.linalg.pinv(h)
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return BeamformingWeights(np.transpose(w, (2, 0, 1)))


def subcarrier_snr(power, h, w, noise_variance: float):
    """SNR of one subcarrier, ``p |h.w|^2 / sigma^2``.

    Arguments
    ---------
    power : float, array
        transmit power allocated to the stream in watts.
    h : array
        channel vector (or stack of vectors along the last axis).
    w : array
        beamforming vector with the same shape as `h`.
    noise_variance : float
        noise variance in watts.

    Returns
    -------
    snr : float, array
        linear signal-to-noise ratio.
    """
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise InvalidArgumentError(f"negative power: {power}")
    if not noise_variance > 0:
        raise InvalidArgumentError("noise variance must be positive, got "
                                   f"{noise_variance}")
    gain = np.abs(np.sum(np.asarray(h)*np.asarray(w), axis=-1))**2
    snr = power*gain/noise_variance
    return float(snr) if np.ndim(snr) == 0 else snr


def effective_gains(channel: ChannelRealization,
                    weights: BeamformingWeights) -> np.ndarray:
    """Own-signal gains |h_{l_r}.w_{l_r}|^2, shape (receivers, subcarriers).
    """
    return np.abs(np.sum(channel.coeffs*weights.weights, axis=-1))**2


def write_channel_trace(path: str, channels: list) -> None:
    """Write a sequence of channel realizations to a binary trace file.

    The file starts with one ASCII header line (see `TRACE_HEADER`) followed
    by the coefficients as interleaved little-endian float64 (real, imag)
    pairs ordered by transmission, receiver, subcarrier and antenna.
    """
    channels = list(channels)
    if not channels:
        raise InvalidArgumentError("no channels to write")
    first = channels[0]
    shape = first.coeffs.shape
    for c in channels:
        if c.coeffs.shape != shape or c.noise_variance != first.noise_variance:
            raise InvalidArgumentError("all channels in a trace must share "
                                       "dimensions and noise variance")
    header = _TRACE_HEADER_OUT.format(transmissions=len(channels),
                                      receivers=shape[0],
                                      subcarriers=shape[1],
                                      num_tx=shape[2],
                                      noise_variance=first.noise_variance)
    data = np.stack([c.coeffs for c in channels])
    pairs = np.stack([data.real, data.imag], axis=-1).astype(TRACE_DTYPE)
    with open(path, 'wb') as f:
        f.write((header + '\n').encode('ascii'))
        f.write(pairs.tobytes())
    logging.info(f"wrote {len(channels)} channels to {path}")


def read_channel_trace(path: str) -> list:
    """Read channel realizations written by :func:`write_channel_trace`.

    Returns
    -------
    channels : list
        list of :class:`ChannelRealization`, one per transmission.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"file not found: {path}")
    with open(path, 'rb') as f:
        line = f.readline().decode('ascii', errors='replace').strip()
        meta = parse(TRACE_HEADER, line)
        if meta is None:
            raise TraceFormatError(f"unrecognized trace header: {line!r}")
        payload = f.read()
    dims = (meta['transmissions'], meta['receivers'], meta['subcarriers'],
            meta['num_tx'])
    if min(dims) < 1:
        raise TraceFormatError(f"trace dimensions must be positive, got "
                               f"{dims}")
    expected = int(np.prod(dims))*2*TRACE_DTYPE.itemsize
    if len(payload) != expected:
        raise TraceFormatError(f"expected {expected} payload bytes for "
                               f"dimensions {dims}, found {len(payload)}")
    pairs = np.frombuffer(payload, dtype=TRACE_DTYPE).reshape(dims + (2,))
    coeffs = pairs[..., 0] + 1j*pairs[..., 1]
    logging.info(f"read {dims[0]} channels from {path}")
    return [ChannelRealization(c, meta['noise_variance']) for c in coeffs]
