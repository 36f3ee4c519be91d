import math

import numpy as np
import pytest

from wavelab.evolve import critical_norm
from wavelab.models import (
    BlowupError,
    ModelError,
    ModelKind,
    ModelSpec,
    cutoff,
    energy,
    exact_ode_blowup,
    nonlinearity,
    potential,
    scale,
    turok_spergel,
    turok_spergel_state,
    z_h3,
    z_s3,
)
from wavelab.spectral import RadialField, State
from wavelab.testing import gaussian, gaussian_state


class TestModelSpec:
    def test_subcritical_powers_are_rejected(self):
        with pytest.raises(ModelError, match="not supercritical"):
            ModelSpec(ModelKind.POWER, p=2.0)

        assert ModelSpec(ModelKind.POWER, p=2.0, allow_subcritical=True).p == 2.0

    def test_invalid_sign_and_cutoff(self):
        with pytest.raises(ModelError):
            ModelSpec(ModelKind.POWER, p=5.0, sign=0)

        with pytest.raises(ModelError):
            ModelSpec(ModelKind.CUBIC_FOCUSING, cutoff=-1.0)

    def test_dict_round_trip(self):
        model = ModelSpec(ModelKind.POWER, p=5.0, sign=-1, cutoff=4.0)

        assert ModelSpec.from_dict(model.to_dict()) == model

    def test_kind_accepts_plain_strings(self):
        assert ModelSpec("wm_s3").is_wave_map


class TestNonlinearity:
    def test_cubic(self):
        assert nonlinearity(ModelSpec(ModelKind.CUBIC_FOCUSING), 1.0, 2.0) == 8.0
        assert nonlinearity(ModelSpec(ModelKind.CUBIC_DEFOCUSING), 1.0, 2.0) == -8.0

    def test_power(self):
        model = ModelSpec(ModelKind.POWER, p=5.0, sign=-1)

        assert nonlinearity(model, 1.0, -2.0) == pytest.approx(32.0)

    def test_sphere_wave_map(self):
        assert nonlinearity(ModelSpec(ModelKind.WM_S3), 1.0, math.pi / 2.0) == pytest.approx(math.pi)

    def test_wave_map_is_continuous_across_series_switch(self):
        model = ModelSpec(ModelKind.WM_S3)
        r = np.array([1.0, 1.0])
        u = np.array([0.2499999, 0.2500001])
        values = nonlinearity(model, r, u)

        assert values[0] == pytest.approx(values[1], rel=1e-5)

    def test_wave_map_finite_at_origin(self):
        values = nonlinearity(ModelSpec(ModelKind.WM_H3), np.array([0.0]), np.array([1.5]))

        assert values[0] == pytest.approx(-(4.0 / 3.0) * 1.5**3)

    def test_hyperbolic_overflow(self):
        with pytest.raises(BlowupError):
            nonlinearity(ModelSpec(ModelKind.WM_H3), 10.0, 100.0)

    def test_potential_is_antiderivative(self):
        r = np.array([0.1, 0.5, 1.0, 2.0, 3.0])
        u = np.array([0.5, 0.7, 0.7, 0.7, -0.4])
        h = 1e-6

        for kind in (ModelKind.CUBIC_FOCUSING, ModelKind.WM_S3, ModelKind.WM_H3):
            model = ModelSpec(kind)
            slope = (potential(model, r, u + h) - potential(model, r, u - h)) / (2 * h)

            np.testing.assert_allclose(slope, -nonlinearity(model, r, u), rtol=1e-6, atol=1e-8)

    def test_cutoff_switches_between_zero_and_one(self):
        values = cutoff(2.0, np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0]))

        np.testing.assert_allclose(values, [0.0, 0.0, 0.0, 0.5, 1.0, 1.0])

    def test_localised_model(self):
        model = ModelSpec(ModelKind.CUBIC_FOCUSING, cutoff=2.0)

        assert nonlinearity(model, np.array([0.5, 3.0]), 2.0).tolist() == [0.0, 8.0]


class TestZ:
    def test_value_at_origin(self):
        assert z_s3(0.0)[0] == pytest.approx(4.0 / 3.0)
        assert z_h3(0.0)[0] == pytest.approx(-4.0 / 3.0)

    def test_bounds(self):
        rho = np.linspace(0.0, 5.0, 501)

        assert np.all(z_s3(rho) >= 0.0)
        assert np.all(z_s3(rho) <= 4.0 / 3.0 + 1e-12)
        assert np.all(z_h3(rho) <= -4.0 / 3.0 + 1e-12)

    def test_factorises_the_nonlinearity(self):
        r = np.array([0.5, 1.0, 2.0])
        u = np.array([0.3, 1.1, -0.8])

        np.testing.assert_allclose(
            u**3 * z_s3(r * u), nonlinearity(ModelSpec(ModelKind.WM_S3), r, u), rtol=1e-12
        )


class TestEnergy:
    def test_kinetic_energy_of_gaussian_velocity(self, grid):
        state = State(0.0, RadialField.zeros(grid), gaussian(grid))

        assert energy(ModelSpec(ModelKind.FREE), state) == pytest.approx(3.0 * math.sqrt(math.pi) / 16.0, rel=1e-9)

    def test_gradient_energy_of_gaussian(self, grid):
        state = State(0.0, gaussian(grid), RadialField.zeros(grid))

        assert energy(ModelSpec(ModelKind.FREE), state) == pytest.approx(15.0 * math.sqrt(math.pi) / 32.0, rel=1e-9)

    def test_wave_map_forms_agree(self, grid):
        model = ModelSpec(ModelKind.WM_S3)
        state = gaussian_state(grid, 0.5, velocity=0.3)

        assert energy(model, state, form="psi") == pytest.approx(energy(model, state), rel=1e-8)

    def test_psi_form_needs_a_wave_map(self, grid):
        with pytest.raises(ModelError):
            energy(ModelSpec(ModelKind.CUBIC_FOCUSING), gaussian_state(grid), form="psi")


class TestClosedForms:
    def test_ode_blowup(self):
        u, ut = exact_ode_blowup(1.0, 0.0)

        assert (u, ut) == pytest.approx((math.sqrt(2.0), math.sqrt(2.0)))

        with pytest.raises(ModelError):
            exact_ode_blowup(1.0, 1.0)

    def test_turok_spergel(self):
        psi, psi_t = turok_spergel(1.0, 1.0)

        assert psi == pytest.approx(math.pi / 2.0)
        assert psi_t == pytest.approx(-1.0)

        with pytest.raises(ModelError):
            turok_spergel(0.0, 1.0)

    def test_turok_spergel_state_near_origin(self, grid):
        state = turok_spergel_state(0.5, grid)

        assert state.t == 0.5
        assert state.u.values[0] == pytest.approx(4.0, rel=1e-6)
        assert state.ut.values[0] == pytest.approx(-8.0, rel=1e-6)


class TestScaling:
    def test_critical_norm_is_scale_invariant(self, grid):
        state = gaussian_state(grid, 0.4, velocity=0.2)

        assert critical_norm(scale(state, 2.0)) == pytest.approx(critical_norm(state), rel=1e-6)

    def test_scaling_rescales_time(self, grid):
        assert scale(gaussian_state(grid).replace(t=0.5), 2.0).t == 1.0

    def test_rejects_non_positive_factor(self, grid):
        with pytest.raises(ModelError):
            scale(gaussian_state(grid), 0.0)
