import numpy as np
import pytest

from wavelab.channels import channel_ensemble
from wavelab.evolve import EvolveConfig, evolve
from wavelab.models import ModelKind, ModelSpec
from wavelab.spectral import RadialGrid, forward_transform, inverse_transform
from wavelab.stationary import AutonomousModel, stable_manifold
from wavelab.testing import band_limited, gaussian_state


class TestTransformBenchmark:
    @pytest.mark.benchmark
    def test_forward_and_inverse_1k_nodes(self, benchmark):
        """Benchmark a transform round trip on 1,024 nodes with matrices already built."""
        grid = RadialGrid(1024, 64.0)
        field = band_limited(grid, np.random.default_rng(0))

        benchmark(lambda: inverse_transform(forward_transform(field)))


class TestEvolveBenchmark:
    @pytest.mark.benchmark
    def test_cubic_evolution_1k_steps(self, benchmark, grid):
        """Benchmark 1,000 split-step spectral steps of the focusing cubic equation."""
        model = ModelSpec(ModelKind.CUBIC_FOCUSING)
        state = gaussian_state(grid, 0.1)
        config = EvolveConfig(dt=1e-3, t_end=1.0, snapshot_stride=1_000)

        benchmark(lambda: evolve(model, state, config))


class TestExperimentBenchmark:
    @pytest.mark.benchmark
    def test_stable_manifold(self, benchmark):
        """Benchmark the backward integration of the cubic stable manifold."""
        benchmark(lambda: stable_manifold(AutonomousModel.CUBIC, 1.0, -6.0))

    @pytest.mark.benchmark
    def test_channel_ensemble_threads(self, benchmark, grid):
        """Benchmark a small exterior energy ensemble on four threads."""
        benchmark(lambda: channel_ensemble(grid, 1.0, 8, seed=0, T_probe=1.0, threads=4))
