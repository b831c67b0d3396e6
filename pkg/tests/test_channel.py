import math

import numpy as np
import pytest

from common.channel import LinkSample, gain_db, link_from_gain, reachable, sample_link
from common.world import GridPos
from config import ChannelParams
from tests.conftest import open_city


class TestGain:
    def test_reference_distance(self):
        params = ChannelParams()
        assert gain_db(params, 1.0, los=True) == params.beta_los
        assert gain_db(params, 0.2, los=False) == params.beta_nlos

    def test_hundred_meters(self):
        params = ChannelParams(alpha_los=-22.0, beta_los=-42.0)
        assert gain_db(params, 100.0, los=True) == pytest.approx(-86.0, abs=1e-12)

    def test_shadowing_is_additive(self):
        params = ChannelParams()
        assert gain_db(params, 100.0, True, shadowing_db=3.0) == pytest.approx(gain_db(params, 100.0, True) + 3.0)


class TestLink:
    def test_unit_snr_gives_unit_rate(self):
        params = ChannelParams(tx_power_w=1.0, noise_power_w=1e-9)
        sample = link_from_gain(params, -90.0, los=True)
        assert sample.snr == pytest.approx(1.0)
        assert sample.rate == pytest.approx(1.0)

    def test_zero_sigma_is_deterministic(self, rng):
        params = ChannelParams(sigma_los=0.0, sigma_nlos=0.0)
        city = open_city(5, 5)
        uav, device = GridPos(0, 0, 60.0), GridPos(4, 4, 0.0)
        distance = float(np.linalg.norm(city.xyz(uav) - city.xyz(device)))
        sample = sample_link(params, uav, device, city, rng)
        assert sample.los
        assert sample.gain_db == pytest.approx(gain_db(params, distance, True), abs=1e-12)

    def test_shadowing_std(self):
        params = ChannelParams(sigma_los=2.0)
        city = open_city(5, 5)
        uav, device = GridPos(0, 0, 60.0), GridPos(4, 4, 0.0)
        rng = np.random.default_rng(7)
        gains = np.array([sample_link(params, uav, device, city, rng, los=True).gain_db for _ in range(100_000)])
        assert 1.9 <= gains.std() <= 2.1


class TestReachable:
    @staticmethod
    def _sample(snr: float) -> LinkSample:
        return LinkSample(gain_db=0.0, los=True, snr=snr, rate=math.log2(1.0 + snr))

    def test_at_threshold(self):
        params = ChannelParams(snr_threshold=0.05)
        assert reachable(self._sample(0.05), params)

    def test_zero_snr(self):
        assert not reachable(self._sample(0.0), ChannelParams(snr_threshold=0.05))

    def test_zero_threshold(self):
        assert reachable(self._sample(0.0), ChannelParams(snr_threshold=0.0))
