import math

import numpy as np
import pytest

from wavelab.channels import (
    ChannelDatum,
    ChannelError,
    ChannelReport,
    channel_ensemble,
    channel_experiment,
    exterior_norm2,
    extrapolate,
    inner,
    norm2,
    perp_norm2_closed,
    project_plane,
    propagate,
    random_perp_datum,
    smallest_bound,
)
from wavelab.testing import gaussian_state, random_bumps


@pytest.fixture
def datum(grid, rng):
    f = random_bumps(grid, rng, centres=(1.5, 2.5))
    g = random_bumps(grid, rng, centres=(1.5, 2.5))

    return ChannelDatum(f, g, 1.0)


class TestChannelDatum:
    def test_plane_norms(self, grid):
        assert norm2(ChannelDatum.plane(grid, R=1.0, a=1.0)) == pytest.approx(3.0)
        assert norm2(ChannelDatum.plane(grid, R=2.0, b=1.0)) == pytest.approx(0.5)

    def test_radius_must_fit_on_grid(self, grid):
        with pytest.raises(ChannelError):
            ChannelDatum.plane(grid, R=16.0)

        with pytest.raises(ChannelError):
            ChannelDatum.plane(grid, R=0.0)

    def test_exterior_norm_beyond_grid(self, grid):
        with pytest.raises(ChannelError):
            exterior_norm2(gaussian_state(grid), 10.0, 7.0)

    def test_plane_propagates_in_closed_form(self, grid):
        moved = propagate(ChannelDatum.plane(grid, R=1.0, a=1.0, b=2.0), 3.0)

        assert moved.R == 4.0
        assert (moved.a, moved.b) == (7.0, 2.0)


class TestProjection:
    def test_split_is_orthogonal(self, datum):
        pi, perp = project_plane(datum)
        scale = norm2(datum)

        assert abs(inner(pi, perp)) <= 1e-10 * scale
        assert norm2(pi) + norm2(perp) == pytest.approx(scale, rel=1e-9)

    def test_projection_is_idempotent(self, datum):
        _, perp = project_plane(datum)
        pi, _ = project_plane(perp)

        assert abs(pi.a) <= 1e-12
        assert abs(pi.b) <= 1e-12

    def test_plane_data_project_onto_themselves(self, grid):
        pi, perp = project_plane(ChannelDatum.plane(grid, R=1.0, a=2.0, b=-1.0))

        assert (pi.a, pi.b) == (2.0, -1.0)
        assert norm2(perp) == pytest.approx(0.0, abs=1e-12)

    def test_closed_form_of_complement_norm(self, datum):
        _, perp = project_plane(datum)

        assert perp_norm2_closed(datum) == pytest.approx(norm2(perp), rel=1e-9)

        with pytest.raises(ChannelError):
            perp_norm2_closed(perp)

    def test_random_data_are_orthogonal_to_the_plane(self, grid, rng):
        perp = random_perp_datum(grid, 1.0, rng)
        pi, _ = project_plane(perp)

        assert norm2(pi) <= 1e-20

    @pytest.mark.parametrize("R", [0.5, 2.0, 3.0])
    def test_orthogonality_holds_for_any_radius(self, grid, rng, R):
        for _ in range(3):
            perp = random_perp_datum(grid, R, rng)
            pi, _ = project_plane(perp)

            assert perp.R == R
            assert norm2(perp) > 0.0
            assert norm2(pi) <= 1e-20 * norm2(perp)


class TestExtrapolation:
    def test_polynomials_are_reproduced(self):
        h = np.array([1.0, 0.5, 0.25, 0.125])

        assert extrapolate(h, 3.0 + h - 2.0 * h**3) == pytest.approx(3.0)

    def test_plane_energy_vanishes_at_infinity(self, grid):
        report = channel_experiment(ChannelDatum.plane(grid, R=1.0, a=1.0), T_probe=1.0)

        assert report.proj_norm2 == pytest.approx(3.0)
        assert abs(report.ext_plus) <= 1e-10
        assert abs(report.ext_minus) <= 1e-10
        assert math.isnan(report.c0_lower)

    def test_sample_times_must_fit_on_grid(self, grid):
        with pytest.raises(ChannelError, match="need r_max"):
            channel_experiment(ChannelDatum.plane(grid, R=1.0, a=1.0))


class TestEnsemble:
    def test_members_keep_exterior_energy(self, grid):
        reports = channel_ensemble(grid, 1.0, 3, seed=0, T_probe=1.0)

        assert len(reports) == 3

        for report in reports:
            assert report.proj_norm2 <= 1e-20
            assert 0 < report.c0_lower < 1

    def test_results_do_not_depend_on_threads(self, grid):
        serial = channel_ensemble(grid, 1.0, 2, seed=7, T_probe=1.0)
        threaded = channel_ensemble(grid, 1.0, 2, seed=7, T_probe=1.0, threads=2)

        assert [report.c0_lower for report in threaded] == pytest.approx(
            [report.c0_lower for report in serial], rel=1e-12
        )

    def test_empty_ensemble(self, grid):
        with pytest.raises(ChannelError):
            channel_ensemble(grid, 1.0, 0)

    def test_smallest_bound_skips_undefined_members(self):
        reports = [
            ChannelReport(1.0, 3.0, 0.0, 0.0, 0.0),
            ChannelReport(1.0, 0.0, 2.0, 0.5, 0.2),
            ChannelReport(1.0, 0.0, 2.0, 0.1, 0.3),
        ]

        assert math.isnan(reports[0].c0_lower)
        assert smallest_bound(reports) == pytest.approx(0.15)
        assert math.isnan(smallest_bound(reports[:1]))
        assert math.isnan(smallest_bound([]))
