import numpy as np
import pytest
import linkfair
import linkfair.channel

NUM_TX = 4
RECEIVERS = 4
SUBCARRIERS = 52
NOISE_VARIANCE = 1e-6
CORRELATION = 0.9
SEED = 20240611


def _channel(**kws):
    args = dict(num_tx=NUM_TX, receivers=RECEIVERS, subcarriers=SUBCARRIERS,
                noise_variance=NOISE_VARIANCE, correlation=CORRELATION,
                seed=SEED)
    args.update(kws)
    return linkfair.generate_channel(**args)


def test_generate_shape():
    channel = _channel()
    assert channel.coeffs.shape == (RECEIVERS, SUBCARRIERS, NUM_TX)
    assert channel.receivers == RECEIVERS
    assert channel.num_data_subcarriers == SUBCARRIERS
    assert channel.num_tx == NUM_TX
    assert channel.matrix(3).shape == (RECEIVERS, NUM_TX)
    assert not channel.coeffs.flags.writeable


def test_generate_deterministic():
    a, b = _channel(), _channel()
    assert np.array_equal(a.coeffs, b.coeffs)
    c = _channel(seed=SEED + 1)
    assert not np.array_equal(a.coeffs, c.coeffs)
    s = np.random.SeedSequence(entropy=SEED, spawn_key=(7,))
    assert np.array_equal(_channel(seed=s).coeffs, _channel(seed=s).coeffs)


def test_generate_pathloss():
    scale = (1.0, 0.8, 0.6, 0.5)
    flat = _channel()
    faded = _channel(pathloss=scale)
    assert np.allclose(faded.coeffs, flat.coeffs*np.array(scale)[:, None,
                                                                 None])
    with pytest.raises(linkfair.InvalidConfigError):
        _channel(pathloss=(1., 1.))


def test_generate_correlation():
    # AR(1) across subcarriers: neighbors far more alike than distant ones
    channel = _channel(subcarriers=2000, seed=1)
    h = channel.coeffs
    near = np.mean(np.abs(h[:, 1:, :] - h[:, :-1, :])**2)
    far = np.mean(np.abs(h[:, 100:, :] - h[:, :-100, :])**2)
    assert near < 0.5*far
    assert np.mean(np.abs(h)**2) == pytest.approx(1, abs=0.1)


def test_generate_unit_variance():
    h = _channel(subcarriers=6250, correlation=0., seed=2).coeffs
    assert h.size == 10**5
    assert np.mean(np.abs(h)**2) == pytest.approx(1, rel=0.02)


def test_generate_strong_correlation():
    # RMS step between adjacent subcarriers is sqrt(2 (1 - rho)) ~ 0.045
    h = _channel(correlation=0.999, seed=3).coeffs
    assert np.sqrt(np.mean(np.abs(np.diff(h, axis=1))**2)) < 0.05


@pytest.mark.parametrize("kws, error", [
    (dict(receivers=5), linkfair.UnsupportedGeometryError),
    (dict(correlation=1.), linkfair.InvalidConfigError),
    (dict(correlation=-0.1), linkfair.InvalidConfigError),
    (dict(noise_variance=0.), linkfair.InvalidConfigError),
    (dict(subcarriers=0), linkfair.InvalidConfigError),
])
def test_generate_invalid(kws, error):
    with pytest.raises(error):
        _channel(**kws)


def test_realization_invalid():
    with pytest.raises(linkfair.InvalidConfigError):
        linkfair.ChannelRealization(np.ones((2, 4)), 1.)
    with pytest.raises(linkfair.UnsupportedGeometryError):
        linkfair.ChannelRealization(np.ones((3, 1, 2)), 1.)


class TestZeroForcing:

    def setup_method(self, method):
        self.channel = _channel()
        self.weights = linkfair.zf_weights(self.channel)

    def test_unit_norm(self):
        w = self.weights.weights
        assert w.shape == self.channel.coeffs.shape
        assert np.allclose(np.linalg.norm(w, axis=-1), 1, atol=1e-12)

    def test_nulls_interference(self):
        h, w = self.channel.coeffs, self.weights.weights
        # cross[j, r, l] = h_{l_j} . w_{l_r}
        cross = np.einsum('jln,rln->jrl', h, w)
        off = ~np.eye(RECEIVERS, dtype=bool)
        assert np.max(np.abs(cross[off])) < 1e-9
        assert np.all(np.abs(cross[~off]) > 0)

    def test_effective_gains(self):
        gains = linkfair.effective_gains(self.channel, self.weights)
        assert gains.shape == (RECEIVERS, SUBCARRIERS)
        h, w = self.channel.coeffs, self.weights.weights
        ref = np.abs(np.sum(h*w, axis=-1))**2
        assert np.allclose(gains, ref)
        # projection onto the null space of the other receivers
        assert np.all(gains <= np.linalg.norm(h, axis=-1)**2*(1 + 1e-12))

    def test_many_channels(self):
        channel = _channel(subcarriers=1000, correlation=0., seed=5)
        h = channel.coeffs
        w = linkfair.zf_weights(channel).weights
        cross = np.abs(np.einsum('jln,rln->jrl', h, w))
        cross /= np.linalg.norm(h, axis=-1)[:, None, :]
        off = ~np.eye(RECEIVERS, dtype=bool)
        assert np.max(cross[off]) < 1e-9
        assert np.max(np.abs(np.linalg.norm(w, axis=-1) - 1)) < 1e-9

    def test_fewer_receivers(self):
        channel = _channel(receivers=2)
        w = linkfair.zf_weights(channel).weights
        cross = np.sum(channel.coeffs[0]*w[1], axis=-1)
        assert np.max(np.abs(cross)) < 1e-9

    def test_singular(self):
        h = np.array(self.channel.coeffs)
        h[1] = h[0]
        with pytest.raises(linkfair.SingularChannelError):
            linkfair.zf_weights(linkfair.ChannelRealization(h, 1.))
        h[1] = 0
        with pytest.raises(linkfair.SingularChannelError) as e:
            linkfair.zf_weights(linkfair.ChannelRealization(h, 1.))
        assert e.value.subcarrier == 0


def test_subcarrier_snr():
    h = 2*np.array([1, 1])/np.sqrt(2)
    w = np.conj(h)/np.linalg.norm(h)
    snr = linkfair.subcarrier_snr(0.1, h, w, 0.05)
    assert snr == pytest.approx(8.)
    assert linkfair.subcarrier_snr(0., h, w, 0.05) == 0
    with pytest.raises(linkfair.InvalidArgumentError):
        linkfair.subcarrier_snr(-0.1, h, w, 0.05)
    with pytest.raises(linkfair.InvalidArgumentError):
        linkfair.subcarrier_snr(0.1, h, w, 0.)


def test_subcarrier_snr_zero_forcing():
    channel = _channel()
    weights = linkfair.zf_weights(channel)
    unit = linkfair.policy.unit_snr(channel, weights)
    snr = linkfair.subcarrier_snr(0.05, channel.coeffs, weights.weights,
                                  NOISE_VARIANCE)
    assert np.allclose(snr, 0.05*unit)


class TestChannelTrace:

    def setup_method(self, method):
        self.channels = [_channel(seed=s) for s in range(3)]

    def test_read_written(self, tmp_path):
        path = str(tmp_path / 'channels.bin')
        linkfair.write_channel_trace(path, self.channels)
        channels = linkfair.read_channel_trace(path)
        assert len(channels) == 3
        for a, b in zip(self.channels, channels):
            assert np.array_equal(a.coeffs, b.coeffs)
            assert b.noise_variance == NOISE_VARIANCE

    def test_header(self, tmp_path):
        path = tmp_path / 'channels.bin'
        linkfair.write_channel_trace(str(path), self.channels)
        header = path.read_bytes().split(b'\n', 1)[0].decode()
        assert header.startswith('linkfair-trace v1 transmissions=3 ')
        assert 'num_tx=4' in header

    def test_bad_header(self, tmp_path):
        path = tmp_path / 'channels.bin'
        path.write_bytes(b'not a trace\n' + bytes(16))
        with pytest.raises(linkfair.TraceFormatError):
            linkfair.read_channel_trace(str(path))

    def test_truncated(self, tmp_path):
        path = tmp_path / 'channels.bin'
        linkfair.write_channel_trace(str(path), self.channels)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(linkfair.TraceFormatError):
            linkfair.read_channel_trace(str(path))

    def test_empty(self, tmp_path):
        path = tmp_path / 'channels.bin'
        path.write_bytes(b'linkfair-trace v1 transmissions=0 receivers=4 '
                         b'subcarriers=52 num_tx=4 noise_variance=1e-06\n')
        with pytest.raises(linkfair.TraceFormatError):
            linkfair.read_channel_trace(str(path))

    def test_mixed_dimensions(self, tmp_path):
        channels = self.channels + [_channel(receivers=2)]
        with pytest.raises(linkfair.InvalidArgumentError):
            linkfair.write_channel_trace(str(tmp_path / 'x.bin'), channels)

    def test_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            linkfair.read_channel_trace(str(tmp_path / 'missing.bin'))


if __name__ == "__main__":
    pytest.main()
