import math

import numpy as np
import pytest

from wavelab import telemetry
from wavelab._scenarios import build_state
from wavelab.evolve import (
    CausalityError,
    EvolveConfig,
    EvolveError,
    Scheme,
    Termination,
    amplitude_threshold,
    convergence_order,
    evolve,
    step,
)
from wavelab.models import ModelKind, ModelSpec, energy
from wavelab.spectral import RadialField, State, free_propagate
from wavelab.testing import gaussian_state, random_bumps

FREE = ModelSpec(ModelKind.FREE)
CUBIC = ModelSpec(ModelKind.CUBIC_FOCUSING)
WAVE_MAP = ModelSpec(ModelKind.WM_S3)


class TestEvolveConfig:
    def test_rejects_bad_steps(self):
        with pytest.raises(EvolveError, match="dt must be positive"):
            EvolveConfig(dt=0.0, t_end=1.0)

        with pytest.raises(EvolveError):
            EvolveConfig(dt=0.1, t_end=-1.0)

        with pytest.raises(EvolveError):
            EvolveConfig(dt=0.1, t_end=1.0, snapshot_stride=0)

    def test_step_count_reaches_end_time(self):
        assert EvolveConfig(dt=0.1, t_end=1.0).steps == 10
        assert EvolveConfig(dt=0.3, t_end=1.0).steps == 4
        assert EvolveConfig(dt=0.1, t_end=0.0).steps == 0


class TestSpectralScheme:
    def test_free_evolution_is_exact(self, grid):
        state = gaussian_state(grid, velocity=0.5)
        trajectory = evolve(FREE, state, EvolveConfig(dt=0.1, t_end=1.0, snapshot_stride=5))
        expected = free_propagate(state, 1.0)

        assert trajectory.reason == Termination.COMPLETED
        assert trajectory.times.tolist() == pytest.approx([0.0, 0.5, 1.0])
        np.testing.assert_allclose(trajectory.final.u.values, expected.u.values, atol=1e-10)

    def test_free_order_is_infinite(self, grid):
        order = convergence_order(FREE, gaussian_state(grid), [0.1, 0.05], 0.5)

        assert order == math.inf

    def test_cubic_energy_is_conserved(self, grid):
        state = gaussian_state(grid, 0.1)
        trajectory = evolve(CUBIC, state, EvolveConfig(dt=1e-3, t_end=0.5, snapshot_stride=100))
        energies = [energy(CUBIC, snap, strict=False) for snap in trajectory]

        assert len(energies) == 6
        np.testing.assert_allclose(energies, energies[0], rtol=1e-6)

    def test_wave_map_energy_is_conserved(self, grid):
        state = gaussian_state(grid, 0.3, velocity=0.2)
        trajectory = evolve(WAVE_MAP, state, EvolveConfig(dt=1e-3, t_end=1.0, snapshot_stride=100))
        energies = [energy(WAVE_MAP, snap, strict=False) for snap in trajectory]

        assert trajectory.reason == Termination.COMPLETED
        assert len(energies) == 11
        np.testing.assert_allclose(energies, energies[0], rtol=1e-6)

    def test_cubic_order_is_two(self, grid):
        order = convergence_order(CUBIC, gaussian_state(grid), [0.02, 0.01], 0.5)

        assert 1.7 < order < 2.3

    def test_single_step(self, grid):
        state = gaussian_state(grid)
        stepped = step(FREE, state, 0.25)

        assert stepped.t == 0.25
        np.testing.assert_allclose(stepped.u.values, free_propagate(state, 0.25).u.values, atol=1e-10)


class TestStaggeredScheme:
    def test_cfl_bound(self, grid):
        with pytest.raises(EvolveError, match="CFL"):
            evolve(FREE, gaussian_state(grid), EvolveConfig(dt=0.05, t_end=1.0, scheme=Scheme.LEAPFROG_FD))

    def test_order_is_two(self, grid):
        order = convergence_order(FREE, gaussian_state(grid), [0.02, 0.01], 0.5, Scheme.LEAPFROG_FD)

        assert 1.8 < order < 2.2

    def test_agrees_with_spectral_scheme(self, grid):
        state = gaussian_state(grid)
        config = EvolveConfig(dt=0.01, t_end=1.0, scheme=Scheme.LEAPFROG_FD, snapshot_stride=100)
        final = evolve(FREE, state, config).final

        assert np.max(np.abs(final.u.values - free_propagate(state, 1.0).u.values)) < 2e-2

    def test_energy_error_is_second_order(self, grid):
        state = gaussian_state(grid)

        def final_energy(dt):
            config = EvolveConfig(dt=dt, t_end=1.0, scheme=Scheme.LEAPFROG_FD, snapshot_stride=10**6)
            return energy(FREE, evolve(FREE, state, config).final, strict=False)

        reference = final_energy(0.0025)
        coarse = abs(final_energy(0.02) - reference)
        fine = abs(final_energy(0.01) - reference)

        assert 3.2 < coarse / fine < 5.2


class TestBlowup:
    @pytest.fixture
    def ode_data(self, grid):
        return build_state({"kind": "constant_ball", "T": 1.0, "radius": 4.0, "smoothing": 1.0}, grid)

    def test_ode_data_blow_up_near_their_time(self, ode_data):
        config = EvolveConfig(dt=1e-3, t_end=1.5, snapshot_stride=10)
        trajectory = evolve(CUBIC, ode_data, config)

        assert trajectory.reason in (Termination.BLOWUP, Termination.OVERFLOW)
        assert 0.8 < trajectory.final.t < 1.1
        assert trajectory.final.is_finite()

    def test_overflow_keeps_last_finite_step(self, ode_data):
        config = EvolveConfig(
            dt=1e-3, t_end=1.5, snapshot_stride=10, blowup_linf=math.inf, blowup_norm=math.inf
        )
        trajectory = evolve(CUBIC, ode_data, config)

        assert trajectory.reason == Termination.OVERFLOW
        assert trajectory.final.t == pytest.approx(trajectory.steps * 1e-3)
        assert trajectory.final.is_finite()
        assert trajectory.times[-2] < trajectory.final.t

    def test_blowup_is_reported(self, ode_data):
        calls = []

        def handler(name, metadata):
            calls.append((name, metadata))

        telemetry.attach("test-handler", ["wavelab.evolve.blowup"], handler)

        evolve(CUBIC, ode_data, EvolveConfig(dt=1e-3, t_end=1.5, snapshot_stride=10))

        telemetry.detach("test-handler")

        [(name, metadata)] = calls
        assert name == "wavelab.evolve.blowup"
        assert metadata["model"] == "cubic_focusing"
        assert metadata["reason"] in ("blowup", "overflow")

    def test_threshold_bracket_must_straddle(self, grid):
        config = EvolveConfig(dt=0.05, t_end=0.5)

        with pytest.raises(EvolveError, match="bracket"):
            amplitude_threshold(CUBIC, gaussian_state(grid), config, lower=0.01, upper=0.02)


class TestCausality:
    def test_data_must_stay_on_grid(self, grid):
        with pytest.raises(CausalityError):
            evolve(FREE, gaussian_state(grid), EvolveConfig(dt=0.1, t_end=10.0))

    def test_check_can_be_disabled(self, grid):
        config = EvolveConfig(dt=0.5, t_end=10.0, check_support=False, snapshot_stride=100)

        assert evolve(FREE, gaussian_state(grid), config).reason == Termination.COMPLETED

    @pytest.mark.parametrize("model", [FREE, CUBIC])
    def test_compact_data_stay_in_the_light_cone(self, grid, rng, model):
        radius, t_end = 7.0, 2.0
        outside = grid.nodes > radius + t_end + 4 * grid.spacing

        for _ in range(3):
            u = random_bumps(grid, rng, centres=(1.0, 2.0), width=0.6) * 0.01
            config = EvolveConfig(dt=0.01, t_end=t_end, snapshot_stride=10**6)
            final = evolve(model, State(0.0, u, RadialField.zeros(grid)), config).final

            assert np.max(np.abs(u.values[grid.nodes > radius])) <= 1e-10 * u.linf()
            assert np.max(np.abs(final.u.values[outside])) <= 1e-8 * u.linf()

    def test_zero_data_stay_zero(self, grid):
        trajectory = evolve(CUBIC, State.zeros(grid), EvolveConfig(dt=0.1, t_end=1.0))

        assert len(trajectory) == 11
        assert not np.any(trajectory.final.u.values)
