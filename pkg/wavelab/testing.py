"""Deterministic data factories for tests and experiments.

Everything here takes an explicit grid and, where randomness is involved, an explicit
``numpy.random.Generator`` so that results are reproducible from a seed.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erfc

from .spectral import RadialField, RadialGrid, SpectralField, State, inverse_transform


def smooth_ball(r: np.ndarray, radius: float, smoothing: float) -> np.ndarray:
    """Smoothed indicator of the ball of ``radius``, ½·erfc((r − radius)/smoothing).

    Example:
        >>> smooth_ball(grid.nodes, radius=4.0, smoothing=0.25)
    """
    if not smoothing > 0:
        raise ValueError("smoothing must be positive")

    return 0.5 * erfc((np.asarray(r, dtype=float) - radius) / smoothing)


def gaussian(grid: RadialGrid, amplitude: float = 1.0, width: float = 1.0) -> RadialField:
    """The field amplitude·e^{−r²/(2·width²)}."""
    if not width > 0:
        raise ValueError("width must be positive")

    return RadialField.from_function(grid, lambda r: amplitude * np.exp(-(r**2) / (2 * width**2)))


def gaussian_state(
    grid: RadialGrid,
    amplitude: float = 1.0,
    width: float = 1.0,
    *,
    velocity: float = 0.0,
) -> State:
    """Gaussian position data with an optional Gaussian velocity of the same width."""
    return State(0.0, gaussian(grid, amplitude, width), gaussian(grid, velocity, width))


def random_bumps(
    grid: RadialGrid,
    rng: np.random.Generator,
    *,
    count: int = 3,
    centres: tuple[float, float] = (1.0, 3.0),
    width: float = 0.3,
) -> RadialField:
    """Sum of ``count`` even Gaussian bumps with random centres and normal weights."""
    r = grid.nodes
    low, high = centres
    positions = rng.uniform(low, high, count)
    weights = rng.normal(size=count)
    values = np.zeros(grid.n)

    for weight, centre in zip(weights, positions):
        values += weight * (
            np.exp(-((r - centre) ** 2) / (2 * width**2)) + np.exp(-((r + centre) ** 2) / (2 * width**2))
        )

    return RadialField(grid, values)


def band_limited(
    grid: RadialGrid,
    rng: np.random.Generator,
    *,
    bandwidth: float | None = None,
    count: int = 4,
    width: float = 1.0,
) -> RadialField:
    """Random field whose transform is a sum of even Gaussian bumps centred below ``bandwidth``.

    The spectrum is smooth in ρ, so the field decays in r on a scale of 1/``width``.
    ``bandwidth`` defaults to a quarter of the frequency cutoff.
    """
    bandwidth = 0.25 * grid.rho_max if bandwidth is None else bandwidth
    rho = grid.freq_nodes
    centres = rng.uniform(0.0, bandwidth, count)
    weights = rng.normal(size=count)
    spectrum = np.zeros(grid.n)

    for weight, centre in zip(weights, centres):
        spectrum += weight * (
            np.exp(-((rho - centre) ** 2) / (2 * width**2)) + np.exp(-((rho + centre) ** 2) / (2 * width**2))
        )

    return inverse_transform(SpectralField(grid, spectrum))
