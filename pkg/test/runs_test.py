import math

import pytest

from wavelab._config import RunConfig
from wavelab._persist import read_csv, read_json
from wavelab.runs import EXIT_OK, channel_grid, run_evolve, run_kernel, run_norms, run_selfsimilar, run_stationary
from wavelab.selfsimilar import FrameError
from wavelab.stationary import EscapeError


@pytest.fixture
def configure(tmp_path):
    def build(**sections):
        return RunConfig.defaults().merge(RunConfig(out=str(tmp_path / "run"), **sections))

    return build


class TestChannelGrid:
    def test_long_enough_grid_is_kept(self, grid):
        assert channel_grid(grid, 1.0, 1.0) is grid

    def test_grid_is_extended_at_the_same_spacing(self, grid):
        extended = channel_grid(grid, 1.0, None)

        assert extended.r_max == pytest.approx(38.0)
        assert extended.spacing == pytest.approx(grid.spacing, rel=1e-2)


class TestRunEvolve:
    def test_zero_data(self, configure, tmp_path):
        conf = configure(data={"kind": "zero"}, time={"dt": 0.01, "t_end": 0.1, "snapshot_stride": 10})
        result = run_evolve(conf)

        assert result.status == EXIT_OK
        assert result.summary["reason"] == "completed"

        _, header, data = read_csv(tmp_path / "run_series.csv")

        assert data.shape == (2, len(header))
        assert data[:, header.index("energy")].tolist() == [0.0, 0.0]
        assert all(math.isnan(value) for value in data[:, header.index("tail_c")])


class TestRunStationary:
    def test_report(self, configure):
        result = run_stationary(configure(stationary={"ell": 1.0, "s_min": -2.0}))

        assert result.summary["identity"] < 1e-7
        assert result.summary["s_range"][0] == pytest.approx(-2.0)

    def test_escape_is_reported(self, configure):
        with pytest.raises(EscapeError):
            run_stationary(configure(stationary={"model": "pendulum_sinh", "ell": 1.0, "s_min": -10.0}))


class TestRunSelfsimilar:
    def test_ode_blowup_energy_is_constant(self, configure, tmp_path):
        conf = configure(
            data={"kind": "constant_ball", "T": 1.0, "radius": 8.0, "smoothing": 1.0},
            selfsimilar={
                "s_end": 0.5,
                "points": 100,
                "stride": 10,
                "shoot": [math.sqrt(2.0)],
                "check_support": False,
            },
        )
        result = run_selfsimilar(conf)

        _, header, data = read_csv(tmp_path / "run_lyapunov.csv")
        energy = data[:, header.index("energy")]

        assert result.summary["s_range"] == pytest.approx([0.0, 0.5])
        assert energy.max() - energy.min() < 1e-6 * abs(energy[0])
        assert result.summary["shoot"][0]["defect"] == pytest.approx(math.sqrt(2.0), rel=1e-10)

    def test_support_must_fit_in_the_cone(self, configure):
        conf = configure(data={"kind": "gaussian"}, selfsimilar={"T_plus": 1.0})

        with pytest.raises(FrameError, match="cone radius"):
            run_selfsimilar(conf)


class TestRunKernel:
    def test_single_constant_bounds_every_sweep(self, configure, tmp_path):
        conf = configure(kernel={"k": [0, 1], "L": 2.0, "lags": [0.5, 1.0, 2.0], "distances": [0.0]})
        result = run_kernel(conf)

        _, _, data = read_csv(tmp_path / "run_kernel.csv")

        assert data.shape == (6, 5)
        assert result.summary["violation"] == pytest.approx(0.0, abs=1e-12)
        assert result.summary["constant"] > 0


class TestRunNorms:
    def test_zero_state(self, configure, tmp_path):
        result = run_norms(configure(data={"kind": "zero"}))

        assert result.summary["critical_norm"] == 0.0
        assert "envelope" not in result.summary
        assert read_json(tmp_path / "run_norms.json")["critical_norm"] == 0.0

    def test_gaussian_state(self, configure):
        result = run_norms(configure(data={"kind": "gaussian", "amplitude": 1.0}))

        assert result.summary["critical_norm"] == pytest.approx(2.0 * math.pi * math.sqrt(2.0), rel=1e-9)
        assert result.summary["tails"]["N"] > 0
