from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from ._config import ConfigError
from .models import turok_spergel_state
from .spectral import RadialField, RadialGrid, State
from .stationary import (
    AutonomousModel,
    EscapeError,
    ManifoldError,
    physical_profile,
    stable_manifold,
)
from .testing import gaussian, smooth_ball

logger = logging.getLogger(__name__)


def build_state(data: dict[str, Any], grid: RadialGrid) -> State:
    """Initial data described by a ``data`` config section.

    Supported kinds:

    - zero: the zero state
    - gaussian: ``amplitude``·e^{−r²/(2·width²)}, optional Gaussian ``velocity``
    - constant_ball: ``value`` on r ≤ ``radius`` with an erfc edge of width ``smoothing``,
      optional constant ``velocity``; ``T`` instead selects the ODE blow-up data
      (√2/T, √2/T²)
    - file: a state CSV written by :meth:`State.to_csv`, resampled onto ``grid``
    - stationary: the singular profile φ_ℓ of an autonomous reduction, zero velocity
    - turok_spergel: the explicit wave map at ``t0`` truncated at ``truncation``

    Raises:
        ConfigError: For unknown kinds or unusable parameters
    """
    kind = data.get("kind", "zero")
    r = grid.nodes

    match kind:
        case "zero":
            return State.zeros(grid)

        case "gaussian":
            width = float(data.get("width", 1.0))
            u = gaussian(grid, float(data.get("amplitude", 1.0)), width)
            ut = gaussian(grid, float(data.get("velocity", 0.0)), width)
            return State(0.0, u, ut)

        case "constant_ball":
            if "T" in data:
                T = float(data["T"])
                value, velocity = math.sqrt(2.0) / T, math.sqrt(2.0) / T**2
            else:
                value = float(data.get("value", 1.0))
                velocity = float(data.get("velocity", 0.0))

            ball = smooth_ball(r, float(data.get("radius", 4.0)), float(data.get("smoothing", 0.25)))
            return State(0.0, RadialField(grid, value * ball), RadialField(grid, velocity * ball))

        case "file":
            if not data.get("path"):
                raise ConfigError("data kind 'file' needs a path")

            return _load_state(Path(data["path"]), grid)

        case "stationary":
            model = AutonomousModel(data.get("model", "cubic"))
            ell = float(data.get("ell", 1.0))

            s_min = float(data.get("s_min", math.log(r[0])))
            try:
                profile = stable_manifold(model, ell, s_min)
            except (ManifoldError, EscapeError) as error:
                raise ConfigError(f"stationary data unavailable: {error}") from error

            u = physical_profile(profile, grid, outside=0.0)
            if "truncation" in data:
                u = u * RadialField(grid, smooth_ball(r, float(data["truncation"]), 0.25))

            return State(0.0, u, RadialField.zeros(grid))

        case "turok_spergel":
            t0 = float(data.get("t0", 1.0))
            truncation = float(data.get("truncation", 0.5 * grid.r_max))
            state = turok_spergel_state(t0, grid)
            window = RadialField(grid, smooth_ball(r, truncation, float(data.get("smoothing", 0.5))))
            return State(t0, state.u * window, state.ut * window)

        case _:
            raise ConfigError(f"unknown data kind {kind!r}")


def _load_state(path: Path, grid: RadialGrid) -> State:
    if not path.exists():
        raise ConfigError(f"data file {path} doesn't exist")

    state = State.from_csv(path)

    if state.grid == grid:
        return state

    logger.info("resampling %s from n=%d onto n=%d", path, state.grid.n, grid.n)

    r = grid.nodes
    inside = r <= state.grid.r_max
    clipped = np.minimum(r, state.grid.r_max)
    u = np.where(inside, state.u.at(clipped), 0.0)
    ut = np.where(inside, state.ut.at(clipped), 0.0)

    return State(state.t, RadialField(grid, u), RadialField(grid, ut))
