"""
Experiment runners behind the command line.

Each runner takes a resolved :class:`RunConfig`, writes its result files next to the
configured output prefix and returns a :class:`RunResult` whose ``status`` is the process
exit code: 0 when the run completed, 2 when an evolution blew up and 1 for unusable
configurations.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import _persist
from ._config import ConfigError, RunConfig
from ._scenarios import build_state
from .channels import ChannelDatum, channel_ensemble, channel_experiment, smallest_bound
from .diagnostics import (
    DiagnosticError,
    compactness_tails,
    frequency_envelope,
    frequency_scale,
    kernel_sweep,
    strichartz_density,
    weighted_envelope_norm,
)
from .evolve import Termination, critical_norm, evolve
from .models import energy
from .selfsimilar import elliptic_shoot, evolve_w, lyapunov_terms, monotonicity_check, to_selfsimilar
from .spectral import RadialGrid, State, inhomogeneous_norm, lebesgue_norm, sobolev_norm
from .stationary import (
    AutonomousModel,
    ManifoldError,
    asymptotic_slope,
    jacobian_eigenvalues,
    ode_energy_identity,
    stable_manifold,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BLOWUP = 2

SERIES_COLUMNS = [
    "t",
    "linf",
    "energy",
    "critical_norm",
    "strichartz_accum",
    "tail_c",
    "tail_C",
    "N_est",
]

CHANNEL_COLUMNS = ["R", "proj_norm2", "perp_norm2", "ext_plus", "ext_minus", "c0_lower"]


@dataclass(slots=True)
class RunResult:
    status: int
    files: list[Path] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)


def _path(conf: RunConfig, suffix: str) -> Path:
    prefix = conf.output_prefix()

    return prefix.with_name(f"{prefix.name}_{suffix}")


def _is_zero(state: State) -> bool:
    return not (np.any(state.u.values) or np.any(state.ut.values))


def _tails(state: State, selected: set[str]) -> tuple[float, float, float]:
    if _is_zero(state) or not selected & {"tails", "frequency_scale"}:
        return math.nan, math.nan, math.nan

    try:
        if "tails" in selected:
            tails = compactness_tails(state)
            return tails.c, tails.C, tails.N

        return math.nan, math.nan, frequency_scale(state)
    except DiagnosticError:
        return math.nan, math.nan, math.nan


def run_evolve(conf: RunConfig) -> RunResult:
    """Evolve the configured data and write the diagnostic series and snapshots.

    Files:

    - ``<out>_series.csv`` with columns t, linf, energy, critical_norm,
      strichartz_accum, tail_c, tail_C, N_est (unselected diagnostics are nan)
    - ``<out>_snapshot_<index>.csv`` for every recorded snapshot
    - ``<out>_summary.json`` with the termination reason
    """
    model = conf.model_spec()
    grid = conf.radial_grid()
    config = conf.evolve_config()
    state = build_state(conf.data or {}, grid)
    selected = set(conf.diagnostics or ())

    trajectory = evolve(model, state, config)
    times = trajectory.times

    if "strichartz" not in selected:
        strichartz = np.full(len(times), math.nan)
    elif len(times) > 1:
        density = np.array([strichartz_density(snap) for snap in trajectory])
        strichartz = np.sqrt(cumulative_trapezoid(density, times, initial=0.0))
    else:
        strichartz = np.zeros(1)

    rows = []
    for snap, accum in zip(trajectory, strichartz):
        tail_c, tail_C, N_est = _tails(snap, selected)
        rows.append(
            [
                snap.t,
                snap.u.linf(),
                energy(model, snap, strict=False) if "energy" in selected else math.nan,
                critical_norm(snap) if "critical_norm" in selected else math.nan,
                accum,
                tail_c,
                tail_C,
                N_est,
            ]
        )

    meta = {"model": model.to_dict(), "grid": grid.to_dict(), "reason": str(trajectory.reason)}
    files = [_persist.write_csv(_path(conf, "series.csv"), SERIES_COLUMNS, rows, meta)]
    files += [snap.to_csv(_path(conf, f"snapshot_{index:04d}.csv")) for index, snap in enumerate(trajectory)]

    summary = {
        "reason": str(trajectory.reason),
        "steps": trajectory.steps,
        "t_final": trajectory.final.t,
        "detail": trajectory.detail,
    }
    files.append(_persist.write_json(_path(conf, "summary.json"), summary))

    status = EXIT_OK if trajectory.reason == Termination.COMPLETED else EXIT_BLOWUP

    logger.info("evolve finished: %s after %d steps", trajectory.reason, trajectory.steps)

    return RunResult(status, files, summary)


def channel_grid(grid: RadialGrid, R: float, T_probe: float | None, probes: int = 4) -> RadialGrid:
    """``grid``, or a longer grid at the same spacing when the probes would leave it.

    Random data live in r < 5R, and the last probe moves them by 2^{probes−1}·T.
    """
    T = 4.0 * R if T_probe is None else T_probe
    required = 5.0 * R + T * 2.0 ** (probes - 1) + 1.0

    if grid.r_max >= required:
        return grid

    n = math.ceil(grid.n * required / grid.r_max)
    logger.info("channel probes need r_max >= %.3g, using n=%d r_max=%.3g", required, n, required)

    return RadialGrid(n, required, grid.bandwidth)


def run_channels(conf: RunConfig) -> RunResult:
    """Run the exterior energy ensemble and write ``<out>_channels.csv``.

    With ``plane = true`` in the channels section the single datum (r⁻³, 0) on r ≥ R is
    measured instead of a random ensemble.
    """
    section = conf.channels or {}
    R = float(section.get("R", 1.0))
    size = int(section.get("ensemble", 10))
    T_probe = section.get("T_probe")
    T_probe = None if T_probe is None else float(T_probe)

    if size < 1:
        _persist.write_csv(_path(conf, "channels.csv"), ["member", *CHANNEL_COLUMNS], [])
        raise ConfigError("ensemble size must be positive")

    grid = channel_grid(conf.radial_grid(), R, T_probe)

    if section.get("plane", False):
        reports = [channel_experiment(ChannelDatum.plane(grid, R, a=1.0), T_probe)]
    else:
        reports = channel_ensemble(grid, R, size, seed=conf.seed or 0, T_probe=T_probe, threads=conf.threads or 1)

    rows = [[index, *report.to_row().values()] for index, report in enumerate(reports)]
    c0_min = smallest_bound(reports)
    summary = {
        "R": R,
        "ensemble": len(reports),
        "grid": grid.to_dict(),
        "c0_min": c0_min,
        "ext_max": max(max(report.ext_plus, report.ext_minus) for report in reports),
    }

    files = [
        _persist.write_csv(
            _path(conf, "channels.csv"),
            ["member", *CHANNEL_COLUMNS],
            rows,
            {"seed": conf.seed or 0, "c0_min": c0_min},
        ),
        _persist.write_json(_path(conf, "channels.json"), summary),
    ]

    logger.info("channels: %d members, smallest c0 %.4g", len(reports), c0_min)

    return RunResult(EXIT_OK, files, summary)


def run_stationary(conf: RunConfig) -> RunResult:
    """Integrate a stable manifold profile and write ``<out>_stationary.csv`` and ``.json``.

    The CSV holds r, φ(r) and r³φ(r) − ℓ; the JSON report holds the saddle eigenvalues,
    the asymptotic log-log slope and the worst energy identity residual. ℓ = 0 writes the
    zero profile.
    """
    section = conf.stationary or {}
    model = AutonomousModel(section.get("model", "cubic"))
    ell = float(section.get("ell", 1.0))
    s_min = float(section.get("s_min", -6.0))
    eigenvalues = sorted(jacobian_eigenvalues(model, (0.0, 0.0)).real.tolist())
    header = ["r", "phi", "r3phi_minus_ell"]

    try:
        profile = stable_manifold(model, ell, s_min, section.get("s_max"))
    except ManifoldError as error:
        raise ConfigError(str(error)) from error

    r = np.exp(profile.s)
    phi = profile.phi / r
    rows = [list(row) for row in zip(r, phi, r**3 * phi - ell)]

    try:
        slope = asymptotic_slope(profile)
    except ManifoldError:
        slope = None

    report = {
        "model": str(model),
        "ell": ell,
        "eigenvalues": eigenvalues,
        "slope": slope,
        "identity": float(np.max(np.abs(ode_energy_identity(profile)))),
        "s_range": [profile.s_min, profile.s_max],
        "first_sign_change": profile.first_sign_change,
    }

    files = [
        _persist.write_csv(_path(conf, "stationary.csv"), header, rows, {"model": str(model), "ell": ell}),
        _persist.write_json(_path(conf, "stationary.json"), report),
    ]

    return RunResult(EXIT_OK, files, report)


def run_selfsimilar(conf: RunConfig) -> RunResult:
    """Map the configured data into self-similar variables and track the Lyapunov energy.

    Files: ``<out>_lyapunov.csv`` (s, energy and both sides of the energy identity),
    ``<out>_frame.csv`` (the final y, w, w_s) and ``<out>_selfsimilar.json``. An optional
    ``shoot`` list of initial values adds a scan of the stationary self-similar equation
    to the report.

    The data must fit inside the cone r < T₊ − t unless ``check_support`` is false, which
    the ODE blow-up on a large ball needs.
    """
    section = conf.selfsimilar or {}
    grid = conf.radial_grid()
    wave_map = bool(section.get("wave_map", False))
    eps = float(section.get("eps", 1e-3))

    state = build_state(conf.data or {}, grid)
    state = state.replace(t=float(section.get("t0", state.t)))
    frame = to_selfsimilar(
        state,
        float(section.get("T_plus", 1.0)),
        points=int(section.get("points", 200)),
        check_support=bool(section.get("check_support", True)),
    )
    history = evolve_w(
        frame,
        float(section.get("s_end", frame.s + 1.0)),
        ds=section.get("ds"),
        stride=int(section.get("stride", 1)),
        wave_map=wave_map,
    )
    check = lyapunov_terms(history.frames, eps, wave_map=wave_map)

    rows = [[check.s[0], check.energy[0], math.nan, math.nan]]
    rows += [list(row) for row in zip(check.s[1:], check.energy[1:], check.lhs, check.rhs)]
    final = history.frames[-1]

    steps = monotonicity_check(history.frames, eps, wave_map=wave_map) if len(history) > 1 else []

    report: dict[str, Any] = {
        "s_range": [frame.s, final.s],
        "mismatch": check.mismatch,
        "nondecreasing": check.nondecreasing,
        "decreasing_steps": sum(1 for row in steps if row["sign"] < 0),
        "eps": eps,
    }

    if shoot := section.get("shoot"):
        threads = conf.threads or 1
        with ThreadPoolExecutor(max_workers=threads) as pool:
            shots = list(pool.map(lambda a: elliptic_shoot(float(a), eps, wave_map=wave_map), shoot))
        report["shoot"] = [{"a": shot.a, "defect": shot.defect, "w_end": shot.w_end} for shot in shots]

    files = [
        _persist.write_csv(_path(conf, "lyapunov.csv"), ["s", "energy", "dE_ds", "dissipation"], rows),
        _persist.write_csv(_path(conf, "frame.csv"), ["y", "w", "ws"], zip(final.y, final.w, final.ws)),
        _persist.write_json(_path(conf, "selfsimilar.json"), report),
    ]

    return RunResult(EXIT_OK, files, report)


def _default_lags(k: int, count: int = 50) -> np.ndarray:
    return np.geomspace(2.0**-k, 2.0 ** (4 - k), count)


def run_kernel(conf: RunConfig) -> RunResult:
    """Sweep the band kernel K_k and fit one constant for the decay bound across all sweeps.

    Files: ``<out>_kernel.csv`` (k, lag, distance, |K_k|, bound) and ``<out>_kernel.json``.
    """
    section = conf.kernel or {}
    ks = section.get("k", 2)
    ks = [int(k) for k in (ks if isinstance(ks, list) else [ks])]
    L = float(section.get("L", 2.0))
    distances = [float(d) for d in section.get("distances", [0.0])]

    jobs = [(k, distance) for k in ks for distance in distances]

    def sweep(job: tuple[int, float]) -> dict:
        k, distance = job
        lags = section.get("lags")
        lags = _default_lags(k) if lags is None else np.asarray(lags, dtype=float)
        return kernel_sweep(k, lags, distance, L=L)

    with ThreadPoolExecutor(max_workers=conf.threads or 1) as pool:
        sweeps = list(pool.map(sweep, jobs))

    constant = max(result["constant"] for result in sweeps)
    rows = []
    violation = 0.0

    for (k, distance), result in zip(jobs, sweeps):
        bracket = np.sqrt(1.0 + (2.0**k * np.abs(result["lags"] - distance)) ** 2)
        bound = constant * 2.0 ** (6 * k) * bracket**-L
        magnitude = np.abs(result["values"])
        violation = max(violation, float(np.max(magnitude - bound)))
        rows += [list(row) for row in zip([k] * len(bound), result["lags"], [distance] * len(bound), magnitude, bound)]

    report = {
        "L": L,
        "constant": constant,
        "violation": max(violation, 0.0),
        "slopes": [{"k": k, "distance": d, "slope": result["slope"]} for (k, d), result in zip(jobs, sweeps)],
    }

    files = [
        _persist.write_csv(_path(conf, "kernel.csv"), ["k", "lag", "distance", "abs_value", "bound"], rows),
        _persist.write_json(_path(conf, "kernel.json"), report),
    ]

    return RunResult(EXIT_OK, files, report)


def norms_report(state: State) -> dict[str, Any]:
    """Sobolev and Lebesgue norms, envelope and compactness scales of one state."""
    report: dict[str, Any] = {
        "sobolev": {
            str(s): {"u": sobolev_norm(state.u, s, strict=False), "ut": sobolev_norm(state.ut, s, strict=False)}
            for s in (0.5, 1.0, 1.5, 2.0)
        },
        "inhomogeneous_h2": inhomogeneous_norm(state.u, 2.0, strict=False),
        "lebesgue": {str(p): lebesgue_norm(state.u, p) for p in (2.0, 4.0, 10.0, math.inf)},
        "critical_norm": critical_norm(state),
    }

    if not _is_zero(state):
        envelope = frequency_envelope(state)
        tails = compactness_tails(state)
        report["envelope"] = {
            "bands": envelope.bands,
            "a": envelope.a,
            "alpha": envelope.alpha,
            "weighted": weighted_envelope_norm(envelope),
        }
        report["tails"] = {"N": tails.N, "C": tails.C, "c": tails.c, "eta": tails.eta}

    return report


def run_norms(conf: RunConfig) -> RunResult:
    """Write ``<out>_norms.json`` for the configured data."""
    state = build_state(conf.data or {}, conf.radial_grid())
    report = norms_report(state)

    return RunResult(EXIT_OK, [_persist.write_json(_path(conf, "norms.json"), report)], report)
