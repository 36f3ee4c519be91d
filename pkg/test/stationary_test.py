import math

import numpy as np
import pytest

from wavelab.spectral import RadialGrid
from wavelab.stationary import (
    AutonomousModel,
    EscapeError,
    ManifoldError,
    asymptotic_slope,
    elliptic_residual,
    equilibria,
    jacobian_eigenvalues,
    l5_divergence,
    ode_energy_identity,
    phase_portrait,
    physical_profile,
    rhs,
    stable_manifold,
    translate,
)

CUBIC = AutonomousModel.CUBIC


@pytest.fixture(scope="module")
def profile():
    return stable_manifold(CUBIC, 1.0, -2.0)


class TestPhasePlane:
    def test_cubic_equilibria(self):
        points = equilibria(CUBIC)

        assert [x for x, _ in points] == pytest.approx([-math.sqrt(2.0), 0.0, math.sqrt(2.0)])

        for point in points:
            assert rhs(CUBIC, 0.0, np.array(point)) == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_origin_is_a_saddle(self):
        values = jacobian_eigenvalues(CUBIC, (0.0, 0.0))

        assert values.real == pytest.approx([1.0, -2.0])

    def test_pendulum_equilibria_are_spaced_by_quarter_turns(self):
        xs = [x for x, _ in equilibria(AutonomousModel.PENDULUM_SIN, bound=4.0)]

        assert np.diff(xs) == pytest.approx(math.pi / 2.0)

    def test_phase_portrait_shapes(self):
        portrait = phase_portrait(AutonomousModel.PENDULUM_SINH, n=5)

        assert portrait["dx"].shape == (5, 5)


class TestStableManifold:
    def test_equilibrium_gives_zero_profile(self, grid):
        zero = stable_manifold(CUBIC, 0.0, math.log(grid.nodes[0]))

        assert zero.ell == 0.0
        assert not zero.phi.any()
        assert not zero([-1.0, 0.0, 1.0]).any()
        assert zero.first_sign_change is None
        assert np.max(np.abs(ode_energy_identity(zero))) == 0.0
        assert not physical_profile(zero, grid).values.any()

        with pytest.raises(ManifoldError):
            asymptotic_slope(zero)

    def test_reversed_range(self):
        with pytest.raises(ManifoldError):
            stable_manifold(CUBIC, 1.0, 5.0, 4.0)

    def test_decay_matches_expansion(self, profile):
        assert asymptotic_slope(profile) == pytest.approx(-4.0, abs=0.05)

    def test_energy_identity_holds_along_trajectory(self, profile):
        residual = ode_energy_identity(profile)

        assert np.max(np.abs(residual)) < 1e-7 * max(1.0, np.max(profile.dissipation))

    def test_profile_solves_elliptic_equation(self, profile):
        r = np.array([0.2, 1.0, 5.0])

        np.testing.assert_allclose(elliptic_residual(profile, r), 0.0, atol=1e-9)

    def test_wave_map_profile_solves_elliptic_equation(self):
        sphere = stable_manifold(AutonomousModel.PENDULUM_SIN, 1.0, -2.0)

        np.testing.assert_allclose(elliptic_residual(sphere, np.array([0.3, 1.0, 4.0])), 0.0, atol=1e-8)

    def test_hyperbolic_profile_escapes(self):
        with pytest.raises(EscapeError) as error:
            stable_manifold(AutonomousModel.PENDULUM_SINH, 1.0, -10.0)

        assert error.value.s > -10.0

    def test_small_hyperbolic_profile_stays_bounded(self):
        small = stable_manifold(AutonomousModel.PENDULUM_SINH, 0.01, -1.0)

        np.testing.assert_allclose(elliptic_residual(small, np.array([0.5, 2.0])), 0.0, atol=1e-10)

    def test_cubic_profile_changes_sign(self):
        long = stable_manifold(CUBIC, 1.0, -6.0)

        assert long.first_sign_change is not None
        assert long.first_sign_change < long.s_max

    def test_translation_shifts_the_profile(self, profile):
        moved = translate(profile, 0.5)
        s = np.array([-1.0, 0.0, 2.0])

        np.testing.assert_allclose(moved(s + 0.5)[0], profile(s)[0], rtol=1e-8, atol=1e-10)

    def test_evaluation_outside_range(self, profile):
        with pytest.raises(ManifoldError):
            profile(-3.0)


class TestPhysicalProfile:
    def test_grid_must_be_covered(self, profile):
        grid = RadialGrid(256, 16.0)

        with pytest.raises(ManifoldError):
            physical_profile(profile, grid)

        field = physical_profile(profile, grid, outside=0.0)
        r = grid.nodes
        inside = np.log(r) >= profile.s_min

        assert not np.any(field.values[~inside])
        np.testing.assert_allclose(field.values[inside], profile(np.log(r[inside]))[0] / r[inside])

    def test_l5_integral_grows_toward_the_origin(self):
        long = stable_manifold(CUBIC, 1.0, -6.0)
        report = l5_divergence(long, [0.1, 0.01])

        assert 0 < report["values"][0] < report["values"][1]
