import numpy as np
import pytest

from wavelab.spectral import forward_transform
from wavelab.testing import band_limited, gaussian, gaussian_state, random_bumps, smooth_ball


class TestSmoothBall:
    def test_edge_and_interior(self):
        values = smooth_ball(np.array([0.0, 4.0, 12.0]), radius=4.0, smoothing=0.5)

        assert values.tolist() == pytest.approx([1.0, 0.5, 0.0], abs=1e-12)

    def test_rejects_sharp_edges(self):
        with pytest.raises(ValueError, match="smoothing must be positive"):
            smooth_ball(np.zeros(3), 1.0, 0.0)


class TestGaussian:
    def test_amplitude_and_width(self, grid):
        field = gaussian(grid, 3.0, 2.0)

        np.testing.assert_allclose(field.values, 3.0 * np.exp(-(grid.nodes**2) / 8.0))

        with pytest.raises(ValueError):
            gaussian(grid, width=-1.0)

    def test_state_velocity_defaults_to_zero(self, grid):
        state = gaussian_state(grid, 0.5)

        assert state.t == 0.0
        assert not np.any(state.ut.values)


class TestRandomData:
    def test_bumps_are_reproducible(self, grid):
        first = random_bumps(grid, np.random.default_rng(11))
        second = random_bumps(grid, np.random.default_rng(11))

        np.testing.assert_array_equal(first.values, second.values)

    def test_bumps_are_even(self, grid, rng):
        field = random_bumps(grid, rng, centres=(0.5, 1.0))

        assert float(field.derivative_at(0.0)) == pytest.approx(0.0, abs=1e-6)

    def test_band_limited_spectrum(self, grid, rng):
        spectrum = forward_transform(band_limited(grid, rng))
        high = np.abs(spectrum.values[spectrum.rho > 12.0])

        assert np.max(high) < 1e-8 * np.max(np.abs(spectrum.values))
