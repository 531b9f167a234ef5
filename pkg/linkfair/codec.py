"""Frame error rate prediction for convolutionally coded OFDM transmissions.

The prediction chain is: per-subcarrier SNR -> uncoded bit error rate of the
constellation -> mean over subcarriers (effective BER) -> union bound on the
first-event error probability of a hard-decision Viterbi decoder, using the
distance spectrum of the code -> upper bound on the frame error rate.
"""

__all__ = ['McsEntry', 'CodeSpec', 'FerPrediction', 'McsTable',
           'q_function', 'modulation_ber', 'effective_ber',
           'distance_spectrum', 'pairwise_error', 'first_event_bound',
           'fer_upper_bound', 'DEFAULT_FRAME_LENGTH', 'DEFAULT_MCS_TABLE']

import numpy as np
import pandas as pd
import logging
import heapq
import os
from dataclasses import dataclass, field
from fractions import Fraction
from scipy.special import erfc, gammaln, xlogy, xlog1py
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from .errors import InvalidArgumentError, InvalidCodeError, InvalidConfigError
from .utils import load_config, try_parse

DEFAULT_FRAME_LENGTH = 12000
DEFAULT_MCS_TABLE = os.path.join(os.path.dirname(__file__), 'data',
                                 'mcs_table.ini')
SUPPORTED_BITS_PER_SYMBOL = (1, 2, 4, 6, 8)

# tolerance on BER values slightly above 1/2 from round-off
_BER_SLACK = 1e-12

# memo of distance spectra keyed by code parameters
_SPECTRUM_CACHE = {}


@dataclass(frozen=True)
class McsEntry:
    """One modulation-and-coding scheme.

    Attributes
    ----------
    index : int
        1-based position in the MCS ladder.
    bits_per_symbol : int
        bits per constellation symbol (1, 2, 4, 6 or 8).
    code_rate : Fraction
        rate of the (punctured) convolutional code.
    phy_rate : float
        PHY rate in bits per second.
    modulation : str
        human readable constellation name.
    """
    index: int
    bits_per_symbol: int
    code_rate: Fraction
    phy_rate: float
    modulation: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'code_rate', Fraction(self.code_rate))
        if self.bits_per_symbol not in SUPPORTED_BITS_PER_SYMBOL:
            raise InvalidConfigError("unsupported bits per symbol: "
                                     f"{self.bits_per_symbol}")
        if not self.phy_rate > 0:
            raise InvalidConfigError(f"invalid PHY rate: {self.phy_rate}")

    @property
    def label(self) -> str:
        name = self.modulation or f"{2**self.bits_per_symbol}-QAM"
        return f"{name} {self.code_rate}"


@dataclass(frozen=True)
class CodeSpec:
    """Convolutional code together with its (truncated) distance spectrum.

    Attributes
    ----------
    constraint_length : int
        constraint length K (memory K-1).
    generators : tuple
        generator polynomials as octal strings.
    puncture_pattern : tuple
        one bit string per generator; all of the same length (the period).
    spectrum : tuple
        pairs ``(d, a_d)`` for ``d = d_free, d_free + 1, ...``; ``a_d`` is the
        number of weight-`d` error events per trellis position (averaged over
        puncturing phases).
    max_terms : int
        number of stored spectrum terms.
    """
    constraint_length: int
    generators: tuple
    puncture_pattern: tuple
    spectrum: tuple
    max_terms: int

    def __post_init__(self):
        ds = [d for d, _ in self.spectrum]
        if not ds or ds[0] < 1 or any(b <= a for a, b in zip(ds, ds[1:])):
            raise InvalidCodeError("spectrum must start at d_free >= 1 and "
                                   "strictly increase in d")
        if any(a < 0 for _, a in self.spectrum):
            raise InvalidCodeError("negative spectrum multiplicity")

    @property
    def d_free(self) -> int:
        return self.spectrum[0][0]

    @property
    def distances(self) -> np.ndarray:
        return np.array([d for d, _ in self.spectrum], dtype=int)

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([a for _, a in self.spectrum], dtype=float)

    @property
    def period(self) -> int:
        return len(self.puncture_pattern[0])

    @property
    def rate(self) -> Fraction:
        kept = sum(p.count('1') for p in self.puncture_pattern)
        return Fraction(self.period, kept)


@dataclass(frozen=True)
class FerPrediction:
    """Output of the FER prediction chain; array fields share the leading
    shape of the SNR input.
    """
    effective_ber: np.ndarray
    first_event_bound: np.ndarray
    fer_upper: np.ndarray
    frame_length: int


def q_function(x):
    """Gaussian tail probability Q(x) = P(N(0, 1) > x)."""
    return 0.5*erfc(np.asarray(x, dtype=float)/np.sqrt(2))


def modulation_ber(bits_per_symbol: int, snr):
    """Uncoded Gray-coded bit error rate over AWGN.

    BPSK uses the exact ``Q(sqrt(2 snr))``; square M-QAM (including QPSK)
    uses the nearest-neighbor approximation
    ``4/log2(M) (1 - 1/sqrt(M)) Q(sqrt(3 snr / (M - 1)))``.

    At zero SNR only BPSK and QPSK give 0.5; the approximation yields
    ``2/log2(M) (1 - 1/sqrt(M))`` for larger constellations (0.375 for
    16-QAM, about 0.29 for 64-QAM and 0.23 for 256-QAM).

    Arguments
    ---------
    bits_per_symbol : int
        1 for BPSK, 2/4/6/8 for 4/16/64/256-QAM.
    snr : float, array
        linear symbol SNR.

    Returns
    -------
    ber : float, array
        bit error probability clamped to [0, 0.5].
    """
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0) or np.any(np.isnan(snr)):
        raise InvalidArgumentError("SNR must be nonnegative")
    if bits_per_symbol == 1:
        ber = q_function(np.sqrt(2*snr))
    elif bits_per_symbol in SUPPORTED_BITS_PER_SYMBOL:
        m = 2**bits_per_symbol
        coeff = 4/bits_per_symbol*(1 - 1/np.sqrt(m))
        ber = coeff*q_function(np.sqrt(3*snr/(m - 1)))
    else:
        raise InvalidArgumentError("unsupported constellation with "
                                   f"{bits_per_symbol} bits per symbol")
    ber = np.clip(ber, 0, 0.5)
    return float(ber) if ber.ndim == 0 else ber


def effective_ber(per_subcarrier_snr, mcs):
    """Wideband BER: arithmetic mean of the subcarrier BERs.

    Arguments
    ---------
    per_subcarrier_snr : array
        SNRs along the last axis (other axes are broadcast).
    mcs : McsEntry, int
        scheme or its number of bits per symbol.

    Returns
    -------
    ber : float, array
    """
    snr = np.asarray(per_subcarrier_snr, dtype=float)
    if snr.ndim == 0 or snr.shape[-1] == 0:
        raise InvalidArgumentError("need at least one subcarrier SNR")
    bits = getattr(mcs, 'bits_per_symbol', mcs)
    ber = np.mean(modulation_ber(bits, snr), axis=-1)
    return float(ber) if np.ndim(ber) == 0 else ber


# ----------------------------------------------------------------------------
# DISTANCE SPECTRUM


def _parse_generators(generators, constraint_length):
    gens = []
    for g in generators:
        try:
            value = int(str(g), 8)
        except ValueError:
            raise InvalidCodeError(f"generator {g!r} is not an octal number")
        if value <= 0:
            raise InvalidCodeError("generators must be nonzero")
        if value >= 2**constraint_length:
            raise InvalidCodeError(f"generator {g} is longer than the "
                                   f"constraint length {constraint_length}")
        gens.append(value)
    if not gens:
        raise InvalidCodeError("no generators given")
    return tuple(gens)


def _parse_puncture(puncture_pattern, n):
    if puncture_pattern is None:
        return ('1',)*n
    if isinstance(puncture_pattern, str):
        puncture_pattern = puncture_pattern.split(',')
    pattern = tuple(str(p).strip() for p in puncture_pattern)
    if len(pattern) != n:
        raise InvalidCodeError(f"expected {n} puncture rows, got "
                               f"{len(pattern)}")
    if len(set(map(len, pattern))) != 1 or not pattern[0]:
        raise InvalidCodeError("puncture rows must share a nonzero period")
    if any(set(p) - {'0', '1'} for p in pattern):
        raise InvalidCodeError(f"invalid puncture pattern: {pattern}")
    if not any('1' in p for p in pattern):
        raise InvalidCodeError("puncture pattern removes every bit")
    return pattern


def _branch_tables(gens, pattern, memory):
    """Next-state table of shape (states, 2) and branch output weights of
    shape (states, period, 2).
    """
    states = 2**memory
    period = len(pattern[0])
    s = np.arange(states)
    next_state = np.empty((states, 2), dtype=int)
    weight = np.zeros((states, period, 2), dtype=int)
    keep = np.array([[c == '1' for c in p] for p in pattern], dtype=int)
    for u in (0, 1):
        reg = (u << memory) | s
        next_state[:, u] = reg >> 1
        for i, g in enumerate(gens):
            bit = np.array([bin(r & g).count('1') % 2 for r in reg])
            weight[:, :, u] += bit[:, None]*keep[i][None, :]
    return next_state, weight


def _is_catastrophic(next_state, weight):
    """True if a zero-weight cycle exists among nonzero (state, phase) nodes.
    """
    states, period, _ = weight.shape
    rows, cols = [], []
    for s in range(1, states):
        for p in range(period):
            for u in (0, 1):
                ns = next_state[s, u]
                if ns != 0 and weight[s, p, u] == 0:
                    rows.append(s*period + p)
                    cols.append(ns*period + (p + 1) % period)
    if not rows:
        return False
    if any(r == c for r, c in zip(rows, cols)):
        return True
    n = states*period
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=True,
                                     connection='strong')
    return np.bincount(labels).max() > 1


def _free_distance(next_state, weight, memory):
    """Minimum weight of an error event, over all puncturing phases."""
    states, period, _ = weight.shape
    start = 1 << (memory - 1)
    best = {}
    heap = []
    for p in range(period):
        node = (start, (p + 1) % period)
        w = int(weight[0, p, 1])
        if w < best.get(node, np.inf):
            best[node] = w
            heapq.heappush(heap, (w, node))
    while heap:
        w, (s, p) = heapq.heappop(heap)
        if w > best.get((s, p), np.inf):
            continue
        if s == 0:
            return w
        for u in (0, 1):
            node = (int(next_state[s, u]), (p + 1) % period)
            nw = w + int(weight[s, p, u])
            if nw < best.get(node, np.inf):
                best[node] = nw
                heapq.heappush(heap, (nw, node))
    raise InvalidCodeError("no error event remerges with the zero state")


def _count_events(next_state, weight, memory, max_weight):
    """Number of error events of each weight up to `max_weight`, summed over
    starting phases.
    """
    states, period, _ = weight.shape
    counts = np.zeros(max_weight + 1)
    paths = np.zeros((states, period, max_weight + 1))
    start = 1 << (memory - 1)
    for p in range(period):
        w = weight[0, p, 1]
        if w <= max_weight:
            paths[start, (p + 1) % period, w] += 1
    # every cycle off the zero state has positive weight, so this terminates
    while paths.any():
        new = np.zeros_like(paths)
        for p in range(period):
            q = (p + 1) % period
            for u in (0, 1):
                for k in np.unique(weight[1:, p, u]):
                    mask = np.zeros(states, dtype=bool)
                    mask[1:] = weight[1:, p, u] == k
                    if k > max_weight or not mask.any():
                        continue
                    np.add.at(new[:, q, k:], next_state[mask, u],
                              paths[mask, p, :max_weight + 1 - k])
        counts += new[0].sum(axis=0)
        new[0] = 0
        paths = new
    return counts


def distance_spectrum(constraint_length: int, generators,
                      puncture_pattern=None, max_terms: int = 10) -> CodeSpec:
    """Free distance and leading distance-spectrum terms of a (punctured)
    convolutional code.

    Error events are paths that leave the all-zero state and remerge with it
    for the first time. The free distance is found by a shortest-path search
    over the (state, puncturing phase) trellis; event counts are then
    accumulated weight by weight. With puncturing, events are counted from
    every starting phase and averaged, so that ``a_d`` is the expected number
    of weight-`d` events starting at a given trellis position.

    Results are memoized on the code parameters.

    Arguments
    ---------
    constraint_length : int
        constraint length K >= 2.
    generators : list
        generator polynomials in octal (e.g. ``[133, 171]`` or
        ``['133', '171']``); the most significant bit taps the current input.
    puncture_pattern : list, None
        one bit string per generator with a common period, e.g.
        ``['110', '101']`` for rate 3/4; None for no puncturing.
    max_terms : int
        number of spectrum terms to return, starting at the free distance.

    Returns
    -------
    spec : CodeSpec
    """
    if int(max_terms) != max_terms or max_terms < 1:
        raise InvalidCodeError(f"max_terms must be a positive integer, got "
                               f"{max_terms}")
    if int(constraint_length) != constraint_length or constraint_length < 2:
        raise InvalidCodeError("constraint length must be an integer >= 2")
    constraint_length, max_terms = int(constraint_length), int(max_terms)
    gens = _parse_generators(generators, constraint_length)
    pattern = _parse_puncture(puncture_pattern, len(gens))
    key = (constraint_length, gens, pattern, max_terms)
    if key in _SPECTRUM_CACHE:
        return _SPECTRUM_CACHE[key]

    memory = constraint_length - 1
    next_state, weight = _branch_tables(gens, pattern, memory)
    if _is_catastrophic(next_state, weight):
        raise InvalidCodeError("catastrophic code: zero-weight cycle off the "
                               f"zero state for generators "
                               f"{tuple(oct(g)[2:] for g in gens)}")
    d_free = _free_distance(next_state, weight, memory)
    if d_free < 1:
        raise InvalidCodeError("code has an error event of zero weight")
    max_weight = d_free + max_terms - 1
    counts = _count_events(next_state, weight, memory, max_weight)/len(
        pattern[0])
    spectrum = tuple((d, float(counts[d]))
                     for d in range(d_free, max_weight + 1))
    spec = CodeSpec(constraint_length, tuple(oct(g)[2:] for g in gens),
                    pattern, spectrum, max_terms)
    logging.info(f"computed distance spectrum for K={constraint_length}, "
                 f"generators {spec.generators}, rate {spec.rate}: "
                 f"d_free = {d_free}")
    _SPECTRUM_CACHE.setdefault(key, spec)
    return _SPECTRUM_CACHE[key]


# ----------------------------------------------------------------------------
# UNION BOUND


def _check_ber(b):
    b = np.asarray(b, dtype=float)
    if np.any(np.isnan(b)) or np.any(b < 0) or np.any(b > 0.5 + _BER_SLACK):
        raise InvalidArgumentError("bit error probability must be in "
                                   "[0, 0.5]")
    return np.minimum(b, 0.5)


def _pairwise(d, b):
    # P(more than half of d positions wrong), ties broken by a coin flip;
    # the binomial terms are summed in log space so that b near the
    # smallest normal double underflows to 0 instead of overflowing
    d = np.asarray(d)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    k = np.arange(int(np.max(d)) + 1)
    rest = np.maximum(d - k, 0)
    log_comb = np.where(k <= d, gammaln(d + 1) - gammaln(k + 1)
                        - gammaln(rest + 1), -np.inf)
    log_pmf = log_comb + xlogy(k, b) + xlog1py(rest, -b)
    weight = np.where(2*k > d, 1., np.where(2*k == d, 0.5, 0.))
    return np.clip(np.sum(weight*np.exp(log_pmf), axis=-1), 0, 1)


def pairwise_error(d: int, b):
    """Probability of selecting an incorrect path at Hamming distance `d`
    with hard decisions and channel bit error probability `b`.

    Arguments
    ---------
    d : int
        Hamming distance >= 1.
    b : float, array
        bit error probability in [0, 0.5].

    Returns
    -------
    e_d : float, array
    """
    if int(d) != d or d < 1:
        raise InvalidArgumentError(f"distance must be a positive integer, "
                                   f"got {d}")
    b = _check_ber(b)
    e = _pairwise(int(d), b)
    return float(e) if np.ndim(e) == 0 else e


def first_event_bound(spectrum: CodeSpec, b):
    """Union bound on the first-event error probability,
    ``sum_d a_d E_d(b)``, clamped to [0, 1].
    """
    b = _check_ber(b)
    e_d = _pairwise(spectrum.distances, b[..., None])
    e_u = np.clip(np.sum(spectrum.multiplicities*e_d, axis=-1), 0, 1)
    return float(e_u) if np.ndim(e_u) == 0 else e_u


def fer_upper_bound(e_u, frame_length: int = DEFAULT_FRAME_LENGTH):
    """Upper bound on the frame error rate, ``1 - (1 - e_u)^frame_length``.
    """
    if frame_length < 1:
        raise InvalidArgumentError(f"frame length must be >= 1, got "
                                   f"{frame_length}")
    e_u = np.clip(np.asarray(e_u, dtype=float), 0, 1)
    with np.errstate(divide='ignore'):
        fer = -np.expm1(frame_length*np.log1p(-e_u))
    fer = np.clip(fer, 0, 1)
    return float(fer) if fer.ndim == 0 else fer


# ----------------------------------------------------------------------------
# MCS TABLE


@dataclass
class McsTable:
    """Ladder of modulation-and-coding schemes sharing a convolutional code,
    with the distance spectrum of every code rate.

    Use :meth:`from_config` to load the shipped default ladder.
    """
    entries: list
    codes: dict
    frame_length: int = DEFAULT_FRAME_LENGTH
    source: str = field(default='', compare=False)

    def __post_init__(self):
        if not self.entries:
            raise InvalidConfigError("MCS table is empty")
        rates = [e.phy_rate for e in self.entries]
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise InvalidConfigError("PHY rate must strictly increase with "
                                     "MCS index")
        if [e.index for e in self.entries] != list(
                range(1, len(self.entries) + 1)):
            raise InvalidConfigError("MCS indices must be 1, 2, ..., M")
        for e in self.entries:
            if e.code_rate not in self.codes:
                raise InvalidConfigError(f"no code for rate {e.code_rate}")
        if self.frame_length < 1:
            raise InvalidConfigError("frame length must be >= 1")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, index: int) -> McsEntry:
        """Entry with 1-based MCS index `index`."""
        if not 1 <= index <= len(self.entries):
            raise KeyError(f"no MCS with index {index}")
        return self.entries[index - 1]

    @property
    def phy_rates(self) -> np.ndarray:
        return np.array([e.phy_rate for e in self.entries])

    @classmethod
    def from_config(cls, config_input=None, frame_length=None):
        """Load an MCS ladder and code definition from an INI file.

        Arguments
        ---------
        config_input : str, ConfigParser, None
            path to the file (default: the shipped 20 MHz ladder).
        frame_length : int, None
            override the frame length of the file.

        Returns
        -------
        table : McsTable
        """
        config_input = config_input or DEFAULT_MCS_TABLE
        config = load_config(config_input)
        if not config.has_section('code'):
            raise InvalidConfigError("MCS table file has no [code] section")
        code = {k: try_parse(v) for k, v in config['code'].items()}
        gens = code.get('generators')
        if isinstance(gens, str):
            gens = gens.split(',')
        elif not isinstance(gens, (list, tuple)):
            raise InvalidConfigError("missing generators in [code]")
        gens = [str(g).strip() for g in gens]
        k = int(code.get('constraint_length', 7))
        max_terms = int(code.get('max_terms', 10))
        if frame_length is None:
            frame_length = int(code.get('frame_length', DEFAULT_FRAME_LENGTH))

        codes = {}
        if config.has_section('puncture'):
            for rate, rows in config['puncture'].items():
                spec = distance_spectrum(k, gens, rows.split(','), max_terms)
                codes[Fraction(rate.strip())] = spec
        else:
            codes[Fraction(1, len(gens))] = distance_spectrum(k, gens, None,
                                                              max_terms)
        for rate, spec in codes.items():
            if spec.rate != rate:
                raise InvalidConfigError(f"puncture pattern for rate {rate} "
                                         f"yields rate {spec.rate}")

        entries = []
        sections = sorted((s for s in config.sections()
                           if s.startswith('mcs-')),
                          key=lambda s: int(s.split('-', 1)[1]))
        for s in sections:
            opts = config[s]
            entries.append(McsEntry(
                index=int(s.split('-', 1)[1]),
                bits_per_symbol=int(try_parse(opts['bits_per_symbol'])),
                code_rate=Fraction(opts['code_rate'].strip()),
                phy_rate=float(try_parse(opts['phy_rate'])),
                modulation=opts.get('modulation', '')))
        path = config_input if isinstance(config_input, str) else ''
        return cls(entries, codes, int(frame_length), source=path)

    def predict(self, snr, mcs) -> FerPrediction:
        """Run the FER prediction chain for one scheme.

        Arguments
        ---------
        snr : array
            per-subcarrier SNRs along the last axis.
        mcs : McsEntry, int
            scheme or its 1-based index.

        Returns
        -------
        prediction : FerPrediction
        """
        if not isinstance(mcs, McsEntry):
            mcs = self[int(mcs)]
        b = effective_ber(snr, mcs)
        e_u = first_event_bound(self.codes[mcs.code_rate], b)
        fer = fer_upper_bound(e_u, self.frame_length)
        return FerPrediction(b, e_u, fer, self.frame_length)

    def fer(self, snr, mcs):
        """Predicted FER upper bound for one scheme."""
        return self.predict(snr, mcs).fer_upper

    def to_frame(self):
        """Ladder as a `pandas.DataFrame` with code parameters."""
        rows = []
        for e in self.entries:
            spec = self.codes[e.code_rate]
            rows.append({'mcs': e.index, 'modulation': e.modulation,
                         'bits_per_symbol': e.bits_per_symbol,
                         'code_rate': str(e.code_rate),
                         'phy_rate': e.phy_rate, 'd_free': spec.d_free})
        return pd.DataFrame(rows).set_index('mcs')
