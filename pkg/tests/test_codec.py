import math
from fractions import Fraction
import numpy as np
import pytest
import linkfair
import linkfair.codec

# (constraint length, generators, puncture pattern) -> free distance
D_FREE_REF = {
    (3, ('5', '7'), None): 5,
    (7, ('133', '171'), None): 10,
    (7, ('133', '171'), ('11', '10')): 6,
    (7, ('133', '171'), ('110', '101')): 5,
    (7, ('133', '171'), ('11010', '10101')): 4,
}
# leading event counts of the industry-standard rate 1/2 code
K7_MULTIPLICITIES = [11, 0, 38, 0, 193]

BPSK_BER_0DB = 0.07864960352514258
FER_REF = (1e-6, 12000, 0.011928293)

MCS_TABLE = linkfair.McsTable.from_config()


def test_q_function():
    assert linkfair.codec.q_function(0) == 0.5
    x = np.linspace(-3, 3, 13)
    q = linkfair.codec.q_function(x)
    assert np.allclose(q + q[::-1], 1, atol=1e-15)


def test_bpsk_ber():
    ber = linkfair.codec.modulation_ber(1, 1.0)
    assert ber == pytest.approx(BPSK_BER_0DB, rel=1e-9)
    assert abs(ber - 0.0786) < 1e-3


def test_qpsk_matches_bpsk_per_bit():
    # Gray-coded QPSK at twice the SNR has the BPSK bit error rate
    snr = np.logspace(-1, 2, 10)
    assert np.allclose(linkfair.codec.modulation_ber(2, 2*snr),
                       linkfair.codec.modulation_ber(1, snr), rtol=1e-12)


@pytest.mark.parametrize("bits", [1, 2, 4, 6, 8])
def test_modulation_ber_range(bits):
    snr = np.concatenate([[0.], np.logspace(-3, 6, 50)])
    ber = linkfair.codec.modulation_ber(bits, snr)
    assert np.all((ber >= 0) & (ber <= 0.5))
    assert np.all(np.diff(ber) <= 0)
    assert linkfair.codec.modulation_ber(bits, 1e12) == 0


@pytest.mark.parametrize("bits, ber", [(1, 0.5), (2, 0.5), (4, 0.375),
                                       (6, 7/24), (8, 15/64)])
def test_modulation_ber_zero_snr(bits, ber):
    assert linkfair.codec.modulation_ber(bits, 0.) == pytest.approx(ber)


@pytest.mark.parametrize("bits, snr", [(3, 1.), (1, -1.), (2, np.nan)])
def test_modulation_ber_invalid(bits, snr):
    with pytest.raises(linkfair.InvalidArgumentError):
        linkfair.codec.modulation_ber(bits, snr)


def test_effective_ber():
    snr = np.array([0.5, 1., 4., 100.])
    ber = linkfair.codec.effective_ber(snr, MCS_TABLE[1])
    ref = np.mean([linkfair.codec.modulation_ber(1, s) for s in snr])
    assert ber == pytest.approx(ref, rel=1e-12)
    # flat channel
    assert linkfair.codec.effective_ber(np.full(52, 1.), 1) == \
        pytest.approx(BPSK_BER_0DB, rel=1e-9)
    with pytest.raises(linkfair.InvalidArgumentError):
        linkfair.codec.effective_ber([], 1)


@pytest.mark.parametrize("code, d_free", D_FREE_REF.items())
def test_free_distance(code, d_free):
    spec = linkfair.codec.distance_spectrum(*code)
    assert spec.d_free == d_free
    assert len(spec.spectrum) == spec.max_terms


def test_k3_spectrum():
    spec = linkfair.codec.distance_spectrum(3, [5, 7], max_terms=8)
    assert spec.d_free == 5
    assert list(spec.distances) == list(range(5, 13))
    assert list(spec.multiplicities) == [2**(d - 5) for d in range(5, 13)]
    assert spec.rate == Fraction(1, 2)


def test_k7_spectrum():
    spec = linkfair.codec.distance_spectrum(7, ['133', '171'])
    assert list(spec.multiplicities[:5]) == K7_MULTIPLICITIES
    assert spec.generators == ('133', '171')


def test_punctured_rate():
    spec = linkfair.codec.distance_spectrum(7, [133, 171], ['110', '101'])
    assert spec.rate == Fraction(3, 4)
    assert spec.period == 3
    assert np.all(spec.multiplicities >= 0)


@pytest.mark.parametrize("code", [
    (3, ['3', '5'], None),
    (3, ['7', '7'], None),
])
def test_catastrophic_code(code):
    with pytest.raises(linkfair.InvalidCodeError):
        linkfair.codec.distance_spectrum(*code)


@pytest.mark.parametrize("code", [
    (1, ['1', '1'], None),
    (3, ['9', '7'], None),
    (3, ['17', '7'], None),
    (3, ['5', '7'], ['10', '1']),
    (3, ['5', '7'], ['00', '00']),
    (3, ['5', '7'], ['12', '11']),
])
def test_invalid_code(code):
    with pytest.raises(linkfair.InvalidCodeError):
        linkfair.codec.distance_spectrum(*code)


def test_spectrum_is_memoized():
    a = linkfair.codec.distance_spectrum(3, [5, 7], max_terms=8)
    b = linkfair.codec.distance_spectrum(3, ['5', '7'], max_terms=8)
    assert a is b


@pytest.mark.parametrize("b", [0., 0.01, 0.1, 0.3, 0.5])
def test_pairwise_error(b):
    # a single differing bit is wrong with probability b; two differing
    # bits produce a tie half the time
    assert linkfair.codec.pairwise_error(1, b) == pytest.approx(b, abs=1e-14)
    assert linkfair.codec.pairwise_error(2, b) == pytest.approx(b, abs=1e-14)
    assert linkfair.codec.pairwise_error(3, b) == \
        pytest.approx(3*b**2 - 2*b**3, abs=1e-14)


def test_pairwise_error_at_half():
    for d in range(1, 20):
        assert linkfair.codec.pairwise_error(d, 0.5) == pytest.approx(0.5)


@pytest.mark.parametrize("d, b", [(0, 0.1), (2.5, 0.1), (3, 0.6), (3, -0.1)])
def test_pairwise_error_invalid(d, b):
    with pytest.raises(linkfair.InvalidArgumentError):
        linkfair.codec.pairwise_error(d, b)


def test_pairwise_error_round_off():
    assert linkfair.codec.pairwise_error(4, 0.5 + 1e-13) == \
        pytest.approx(0.5)


@pytest.mark.parametrize("b", [1e-308, 2.2250738585072014e-308, 5e-324])
def test_pairwise_error_tiny_ber(b):
    assert linkfair.codec.pairwise_error(10, b) == 0
    assert linkfair.codec.pairwise_error(11, b) == 0
    assert 0 <= linkfair.codec.pairwise_error(1, b) <= 1e-300


@pytest.mark.parametrize("d", range(1, 21))
def test_pairwise_error_monotone(d):
    b = np.concatenate([[0.], np.logspace(-12, np.log10(0.5), 200)])
    e = linkfair.codec.pairwise_error(d, b)
    assert e[0] == 0
    assert np.all(np.diff(e) >= 0)
    assert e[-1] == pytest.approx(0.5)


def test_pairwise_error_matches_binomial_sum():
    for d in (4, 7, 16):
        for b in (1e-4, 0.02, 0.3):
            assert linkfair.codec.pairwise_error(d, b) == \
                pytest.approx(_pairwise_exact(d, b), rel=1e-10)


def _pairwise_exact(d, b):
    p = sum(math.comb(d, k)*b**k*(1 - b)**(d - k)
            for k in range(d//2 + 1, d + 1))
    if d % 2 == 0:
        p += 0.5*math.comb(d, d//2)*(b*(1 - b))**(d//2)
    return p


def test_first_event_bound():
    spec = linkfair.codec.distance_spectrum(3, [5, 7], max_terms=10)
    b = 0.01
    ref = sum(2**(d - 5)*_pairwise_exact(d, b) for d in range(5, 15))
    assert linkfair.codec.first_event_bound(spec, b) == \
        pytest.approx(ref, rel=1e-10)
    assert linkfair.codec.first_event_bound(spec, 0.) == 0
    assert linkfair.codec.first_event_bound(spec, 0.5) == 1


# largest b at which the first omitted spectrum term of each rate stays
# below 1e-6 of the truncated bound
TRUNCATION_RANGE = {Fraction(1, 2): 1e-3, Fraction(2, 3): 3e-4,
                    Fraction(3, 4): 3e-4, Fraction(5, 6): 1e-4}


@pytest.mark.parametrize("rate", sorted(TRUNCATION_RANGE))
def test_truncation(rate):
    spec = MCS_TABLE.codes[rate]
    longer = linkfair.codec.distance_spectrum(
        spec.constraint_length, spec.generators, spec.puncture_pattern,
        max_terms=spec.max_terms + 1)
    d, a = longer.spectrum[-1]
    b = np.logspace(-8, np.log10(TRUNCATION_RANGE[rate]), 25)
    e_u = linkfair.codec.first_event_bound(spec, b)
    share = a*linkfair.codec.pairwise_error(d, b)/e_u
    assert np.all(share < 1e-6)
    # more terms never lower the bound
    b = np.logspace(-8, np.log10(0.05), 25)
    assert np.all(linkfair.codec.first_event_bound(longer, b) >=
                  linkfair.codec.first_event_bound(spec, b))


def test_fer_upper_bound():
    e_u, frame_length, ref = FER_REF
    fer = linkfair.codec.fer_upper_bound(e_u, frame_length)
    assert fer == pytest.approx(ref, abs=1e-6)
    assert linkfair.codec.fer_upper_bound(0.) == 0
    assert linkfair.codec.fer_upper_bound(1.) == 1
    # L_f = 1 is the first-event probability itself
    assert linkfair.codec.fer_upper_bound(0.25, 1) == pytest.approx(0.25)
    with pytest.raises(linkfair.InvalidArgumentError):
        linkfair.codec.fer_upper_bound(0.1, 0)


class TestMcsTable:

    def setup_method(self, method):
        self.table = MCS_TABLE

    def test_ladder(self):
        assert len(self.table) == 9
        assert [e.index for e in self.table] == list(range(1, 10))
        assert self.table[1].phy_rate == 6.5e6
        assert self.table[9].phy_rate == 78e6
        assert np.all(np.diff(self.table.phy_rates) > 0)
        assert self.table.frame_length == 12000
        with pytest.raises(KeyError):
            self.table[0]

    def test_codes(self):
        assert set(self.table.codes) == {Fraction(1, 2), Fraction(2, 3),
                                         Fraction(3, 4), Fraction(5, 6)}
        frame = self.table.to_frame()
        assert list(frame['d_free']) == [10, 10, 5, 10, 5, 6, 5, 4, 4]
        assert frame.loc[9, 'code_rate'] == '5/6'

    def test_fer_limits(self):
        for mcs in self.table:
            assert self.table.fer(np.zeros(52), mcs) == pytest.approx(1.)
            assert self.table.fer(np.full(52, 1e12), mcs) == 0

    def test_fer_high_snr(self):
        # BPSK bit error rates down to the smallest doubles
        snr = np.linspace(300, 800, 101)[:, None]*np.ones(52)
        b = linkfair.codec.effective_ber(snr, self.table[1])
        assert np.min(b[b > 0]) < 1e-300
        for mcs in self.table:
            fer = self.table.fer(snr, mcs)
            assert np.all(np.isfinite(fer))
            assert np.all(np.diff(fer) <= 0)
        assert self.table.fer(np.full(52, 700.), 1) == 0

    def test_predict_consistency(self):
        snr = np.full(52, 30.)
        pred = self.table.predict(snr, 4)
        b = linkfair.codec.effective_ber(snr, self.table[4])
        assert pred.effective_ber == b
        assert pred.fer_upper == pytest.approx(
            linkfair.codec.fer_upper_bound(pred.first_event_bound, 12000))

    def test_frame_length_override(self):
        table = linkfair.McsTable.from_config(frame_length=100)
        snr = np.full(52, 10.)
        assert table.fer(snr, 1) <= self.table.fer(snr, 1)

    def test_monotone_under_scaling(self):
        rng = np.random.default_rng(1234)
        draws = 10**4
        scales = 2.**np.arange(10)
        mcs = rng.integers(1, len(self.table) + 1, size=draws)
        base = rng.exponential(size=(draws, 52)) * \
            10**rng.uniform(-2, 5, size=(draws, 1))
        for m in np.unique(mcs):
            snr = base[mcs == m][:, None, :]*scales[None, :, None]
            pred = self.table.predict(snr, int(m))
            ber, fer = pred.effective_ber, pred.fer_upper
            assert np.all((ber >= 0) & (ber <= 0.5))
            assert np.all((fer >= 0) & (fer <= 1))
            assert np.all(np.diff(ber, axis=1) <= 0)
            assert np.all(np.diff(fer, axis=1) <= 0)

    def test_invalid_tables(self):
        entries = list(self.table.entries)
        with pytest.raises(linkfair.InvalidConfigError):
            linkfair.McsTable(entries[::-1], self.table.codes)
        with pytest.raises(linkfair.InvalidConfigError):
            linkfair.McsTable([], self.table.codes)
        with pytest.raises(linkfair.InvalidConfigError):
            linkfair.McsTable(entries, {})

    def test_invalid_entry(self):
        with pytest.raises(linkfair.InvalidConfigError):
            linkfair.McsEntry(1, 3, Fraction(1, 2), 6.5e6)
        with pytest.raises(linkfair.InvalidConfigError):
            linkfair.McsEntry(1, 1, Fraction(1, 2), 0.)

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            linkfair.McsTable.from_config('no_such_table.ini')


if __name__ == "__main__":
    pytest.main()
