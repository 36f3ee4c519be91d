from __future__ import annotations

import os
import tomllib
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import orjson

from ._errors import WavelabError
from .evolve import EvolveConfig, Scheme
from .models import ModelSpec
from .spectral import RadialGrid

DIAGNOSTICS = (
    "energy",
    "critical_norm",
    "strichartz",
    "tails",
    "frequency_scale",
)

DATA_KINDS = ("gaussian", "constant_ball", "file", "stationary", "turok_spergel", "zero")

DEFAULTS: dict[str, Any] = {
    "model": {"kind": "cubic_focusing"},
    "grid": {"n": 256, "r_max": 16.0},
    "time": {"dt": 1e-3, "t_end": 1.0, "snapshot_stride": 100, "scheme": "strang_spectral"},
    "data": {"kind": "gaussian", "amplitude": 0.01, "width": 1.0},
    "diagnostics": list(DIAGNOSTICS),
    "seed": 0,
    "out": "wavelab",
    "threads": 1,
    "log_level": "INFO",
    "channels": {"R": 1.0, "ensemble": 10, "T_probe": None},
    "stationary": {"model": "cubic", "ell": 1.0, "s_min": -6.0},
    "selfsimilar": {"T_plus": 1.0, "t0": 0.0, "s_end": 2.0, "points": 200, "eps": 1e-3, "wave_map": False},
    "kernel": {"k": 2, "L": 2, "lags": [0.5, 1.0, 2.0, 4.0], "distances": [0.0]},
}


class ConfigError(WavelabError, ValueError):
    """Raised when a run configuration can't be used.

    This covers:
    - Unknown model kinds, data kinds or diagnostics
    - Grid or time settings that fail validation
    - Malformed TOML or JSON configuration files
    """

    pass


@dataclass
class RunConfig:
    """Configuration for a wavelab run.

    Every field may be left unset (``None``); :meth:`load` layers the sources over
    :data:`DEFAULTS`, so unset fields never mask lower precedence values.
    """

    model: dict[str, Any] | None = None
    grid: dict[str, Any] | None = None
    time: dict[str, Any] | None = None
    data: dict[str, Any] | None = None
    diagnostics: list[str] | None = None
    seed: int | None = None
    out: str | None = None
    threads: int | None = None
    log_level: str | None = None

    channels: dict[str, Any] | None = None
    stationary: dict[str, Any] | None = None
    selfsimilar: dict[str, Any] | None = None
    kernel: dict[str, Any] | None = None

    @classmethod
    def defaults(cls) -> RunConfig:
        return cls.from_dict(DEFAULTS)

    @classmethod
    def from_dict(cls, params: dict[str, Any]) -> RunConfig:
        known = {field_ref.name for field_ref in fields(cls)}

        if unknown := set(params) - known:
            raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")

        return cls(**{key: _copy(value) for key, value in params.items()})

    @classmethod
    def from_env(cls) -> RunConfig:
        """Load configuration from environment variables.

        Supported environment variables:

        - WAVELAB_DATA_DIR: Directory that relative output prefixes are placed in
        - WAVELAB_SEED: Seed for every random draw (default: 0)
        - WAVELAB_THREADS: Worker threads for ensembles and scans (default: 1)
        - WAVELAB_LOG_LEVEL: Logging level (default: INFO)
        """
        seed = os.getenv("WAVELAB_SEED")
        threads = os.getenv("WAVELAB_THREADS")

        try:
            return cls(
                seed=int(seed) if seed else None,
                threads=int(threads) if threads else None,
                log_level=os.getenv("WAVELAB_LOG_LEVEL"),
            )
        except ValueError as error:
            raise ConfigError(f"invalid environment value: {error}") from error

    @classmethod
    def from_cli(cls, params: dict[str, Any]) -> RunConfig:
        return cls(**{key: value for key, value in params.items() if value is not None})

    @classmethod
    def from_toml(cls, path: str | None = None) -> RunConfig:
        path_obj = Path(path or "wavelab.toml")

        if not path_obj.exists():
            return cls()

        try:
            with open(path_obj, "rb") as file:
                params = tomllib.load(file)
        except tomllib.TOMLDecodeError as error:
            raise ConfigError(f"malformed TOML in {path_obj}: {error}") from error

        return cls.from_dict(params)

    @classmethod
    def from_json(cls, data: bytes | str) -> RunConfig:
        try:
            params = orjson.loads(data)
        except orjson.JSONDecodeError as error:
            raise ConfigError(f"malformed JSON: {error}") from error

        if not isinstance(params, dict):
            raise ConfigError("a JSON configuration must be an object")

        return cls.from_dict(params)

    @classmethod
    def from_file(cls, path: str | None = None) -> RunConfig:
        if path and Path(path).suffix == ".json":
            return cls.from_json(Path(path).read_bytes())

        return cls.from_toml(path)

    @classmethod
    def load(cls, path: str | None = None, **overrides: Any) -> RunConfig:
        """Merge defaults, the config file, the environment and ``overrides`` in that order."""
        file_conf = cls.from_file(path)
        env_conf = cls.from_env()
        cli_conf = cls.from_cli(overrides)

        conf = cls.defaults().merge(file_conf).merge(env_conf).merge(cli_conf)
        conf.validate()

        return conf

    def merge(self, other: RunConfig) -> RunConfig:
        def merge_dicts(this, that) -> dict | None:
            if this is None:
                return that

            merged = this.copy()
            merged.update(that)

            return merged

        merged = {}

        for field_ref in fields(self):
            name = field_ref.name
            this_val = getattr(self, name)
            that_val = getattr(other, name)

            if isinstance(that_val, dict):
                merged[name] = merge_dicts(this_val, that_val)
            elif that_val is not None:
                merged[name] = that_val
            else:
                merged[name] = this_val

        return RunConfig(**merged)

    def validate(self) -> None:
        """Check every section that a run would use.

        Raises:
            ConfigError: Describing the first invalid setting
        """
        try:
            self.model_spec()
            self.radial_grid()
            self.evolve_config()
        except (ValueError, KeyError, TypeError) as error:
            raise ConfigError(str(error)) from error

        if unknown := set(self.diagnostics or ()) - set(DIAGNOSTICS):
            raise ConfigError(f"unknown diagnostics: {', '.join(sorted(unknown))}")

        kind = (self.data or {}).get("kind")
        if kind not in DATA_KINDS:
            raise ConfigError(f"unknown data kind {kind!r}, expected one of {DATA_KINDS}")

        if kind == "file" and not (self.data or {}).get("path"):
            raise ConfigError("data kind 'file' needs a path")

        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be at least 1")

    def model_spec(self) -> ModelSpec:
        return ModelSpec.from_dict(self.model or DEFAULTS["model"])

    def radial_grid(self) -> RadialGrid:
        grid = self.grid or DEFAULTS["grid"]

        return RadialGrid(int(grid["n"]), float(grid["r_max"]), float(grid.get("bandwidth", 1.0)))

    def evolve_config(self) -> EvolveConfig:
        time = self.time or DEFAULTS["time"]

        return EvolveConfig(
            dt=float(time["dt"]),
            t_end=float(time["t_end"]),
            scheme=Scheme(time.get("scheme", Scheme.STRANG_SPECTRAL)),
            snapshot_stride=int(time.get("snapshot_stride", 1)),
            blowup_linf=float(time.get("blowup_linf", 1e6)),
            blowup_norm=float(time.get("blowup_norm", 1e4)),
            check_support=bool(time.get("check_support", True)),
        )

    def output_prefix(self) -> Path:
        """The ``out`` prefix, placed under WAVELAB_DATA_DIR when it is relative."""
        prefix = Path(self.out or DEFAULTS["out"])

        if not prefix.is_absolute() and (root := os.getenv("WAVELAB_DATA_DIR")):
            prefix = Path(root) / prefix

        return prefix

    def to_dict(self) -> dict[str, Any]:
        return {key: value for key, value in asdict(self).items() if value is not None}

    def to_json(self) -> bytes:
        return orjson.dumps(self.to_dict(), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS)


def _copy(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _copy(item) for key, item in value.items()}

    if isinstance(value, list):
        return [_copy(item) for item in value]

    return value
