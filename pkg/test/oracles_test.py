import math

import numpy as np
import pytest

from wavelab.oracles import (
    CLOSED_FORMS,
    OracleConfig,
    OracleError,
    OracleReport,
    closed_form_residual,
    compare,
    observed_order,
    oracle_ode,
    oracle_transform,
    richardson,
)
from wavelab.spectral import forward_transform
from wavelab.stationary import AutonomousModel, seed, seed_time, stable_manifold
from wavelab.testing import gaussian


class TestOracleConfig:
    def test_refinement_floor(self):
        with pytest.raises(OracleError):
            OracleConfig(refinement=2)

    def test_positive_step(self):
        with pytest.raises(OracleError):
            OracleConfig(ode_step=0.0)

    def test_callable_transform_needs_a_grid(self):
        with pytest.raises(OracleError):
            oracle_transform(lambda r: np.exp(-(r**2)))


class TestClosedForms:
    @pytest.mark.parametrize("which", CLOSED_FORMS)
    def test_residuals_vanish(self, which):
        for point in [(0.5, 1.5), (1.0, 2.0), (0.2, 3.0)]:
            assert closed_form_residual(which, point) == pytest.approx(0.0, abs=1e-9)

    def test_ode_blowup_after_blowup_time(self):
        with pytest.raises(OracleError):
            closed_form_residual("phi_T", (1.0, 1.0))

    def test_unknown_name(self):
        with pytest.raises(OracleError, match="unknown closed form"):
            closed_form_residual("kink", (1.0, 1.0))


class TestOdeOracle:
    def test_agrees_with_adaptive_integrator(self):
        model = AutonomousModel.CUBIC
        s0 = seed_time(1.0)
        profile = stable_manifold(model, 1.0, -1.0)
        s, states = oracle_ode(model, seed(model, 1.0, s0)[:2], (s0, 0.0))

        assert s[-1] == pytest.approx(0.0, abs=1e-12)
        assert states[-1, 0] == pytest.approx(float(profile(0.0)[0]), rel=1e-8)

    def test_overflow_is_reported(self):
        def runaway(s, y):
            return y**2

        with pytest.raises(OracleError, match="overflowed"):
            oracle_ode(runaway, np.array([1e3]), (0.0, 10.0), OracleConfig(ode_step=0.01))


class TestExtrapolation:
    def test_richardson_removes_leading_error(self):
        assert richardson([2.0, 1.25], 2.0, 2.0) == pytest.approx(1.0)

        with pytest.raises(OracleError):
            richardson([1.0], 2.0, 2.0)

    def test_observed_order(self):
        assert observed_order([1.0, 0.25, 0.0625], 2.0) == pytest.approx([2.0, 2.0])


class TestReport:
    def test_worst_row(self):
        report = OracleReport()
        report.add("a", 1.0, 1.0)
        report.add("b", 1.1, 1.0)

        assert report.worst == pytest.approx(0.1)
        assert OracleReport().worst == 0.0

    def test_compare_uses_relative_norm(self):
        report = compare("vector", np.array([3.0, 4.0]), np.array([3.0, 4.5]))

        assert report.worst == pytest.approx(0.5 / math.hypot(3.0, 4.5))


@pytest.mark.oracle
class TestTransformOracle:
    def test_matches_production_transform(self, grid):
        f = gaussian(grid, 1.0, 0.8)
        report = compare("gaussian", forward_transform(f).values, oracle_transform(f).values)

        assert report.worst < 1e-9
