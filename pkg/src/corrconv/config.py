from __future__ import annotations

import math
import os
import tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from .errors import ConfigError, StateError
from .states import ONE_THIRD, BellDiagonalParams, bell_diagonal_state, params_for_gap

OUTPUT_DIR_ENV = "CORRCONV_OUTPUT_DIR"
FORMATS = ("csv", "json")
_GRID_TOL = 1e-9
_RANGE_TOL = 1e-6


@dataclass
class SweepConfig:
    p_min: float = ONE_THIRD
    p_max: float = 1.0
    p_step: float = 0.01
    delta_in: float = ONE_THIRD
    # Unset coefficients follow the (delta, -delta, 1 - 2 delta) input family.
    c1: Optional[float] = None
    c2: Optional[float] = None
    c3: Optional[float] = None
    output_path: Optional[Path] = None
    format: str = "csv"
    workers: int = 1

    @property
    def c_params(self) -> BellDiagonalParams:
        base = params_for_gap(self.delta_in)
        return BellDiagonalParams(
            c1=base.c1 if self.c1 is None else self.c1,
            c2=base.c2 if self.c2 is None else self.c2,
            c3=base.c3 if self.c3 is None else self.c3,
        )

    @property
    def has_c_override(self) -> bool:
        return any(c is not None for c in (self.c1, self.c2, self.c3))

    def validate(self) -> None:
        if not ONE_THIRD - _RANGE_TOL <= self.p_min <= self.p_max <= 1.0 + _RANGE_TOL:
            raise ConfigError(
                f"need 1/3 <= p_min <= p_max <= 1, got p_min={self.p_min}, p_max={self.p_max}"
            )
        if not self.p_step > 0.0:
            raise ConfigError(f"p_step must be positive, got {self.p_step}")
        if not 0.0 < self.delta_in <= ONE_THIRD + _GRID_TOL:
            raise ConfigError(f"delta_in must lie in (0, 1/3], got {self.delta_in}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        try:
            bell_diagonal_state(self.c_params)
        except StateError as exc:
            raise ConfigError(f"c1, c2, c3 do not give a state: {exc}") from exc

    def grid(self) -> list[float]:
        return p_grid(self.p_min, self.p_max, self.p_step)


@dataclass
class ProtocolConfig:
    n: int = 100_000
    p: float = ONE_THIRD
    delta_in: float = ONE_THIRD
    seed: int = 7
    json_path: Optional[Path] = None
    workers: int = 1

    def validate(self) -> None:
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p must lie in [0, 1], got {self.p}")
        if not 0.0 < self.delta_in <= ONE_THIRD + _GRID_TOL:
            raise ConfigError(f"delta_in must lie in (0, 1/3], got {self.delta_in}")


@dataclass
class QuditCliConfig:
    d: int = 2
    schmidt: tuple[float, ...] = (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))
    m: Optional[float] = None
    p: float = ONE_THIRD
    a: Optional[tuple[float, float]] = None


@dataclass
class RunConfig:
    sweep: SweepConfig = field(default_factory=SweepConfig)
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    qudit: QuditCliConfig = field(default_factory=QuditCliConfig)
    output_dir: Optional[Path] = None
    seed: int = 7
    out: Optional[Path] = None
    format: str = "csv"


def p_grid(p_min: float, p_max: float, step: float) -> list[float]:
    """p_min, p_min + step, ... with p_max appended when the steps miss it."""
    count = int(math.floor((p_max - p_min) / step + _GRID_TOL))
    points = [p_min + k * step for k in range(count + 1)]
    if p_max - points[-1] > _GRID_TOL:
        points.append(p_max)
    return [min(x, p_max) for x in points]


def _expand_env(value: str) -> str:
    return os.path.expandvars(value)


def resolve_output(out: Optional[str | Path], default_name: str, output_dir: Optional[Path]) -> Path:
    """Relative paths and the default file name land in ``output_dir`` when set."""
    path = Path(out) if out is not None else Path(default_name)
    if not path.is_absolute() and output_dir is not None:
        path = output_dir / path
    return path


def _number(raw: Mapping[str, Any], key: str, default: Any, kind: type) -> Any:
    value = raw.get(key, default)
    if value is None:
        return None
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key {key!r}: cannot read {value!r} as {kind.__name__}") from exc


def read_config_file(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    nested = [k for k, v in raw.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: keys must be flat, found tables {nested}")
    return raw


def load_config(path: str | Path | None = None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Defaults, then the flat TOML file at ``path``, then non-None ``overrides``."""
    raw: dict[str, Any] = read_config_file(path) if path is not None else {}
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})

    env_dir = os.environ.get(OUTPUT_DIR_ENV, "").strip()
    output_dir = Path(_expand_env(env_dir)) if env_dir else None
    out = raw.get("out")
    out_path = Path(_expand_env(str(out))) if out is not None else None
    fmt = str(raw.get("format", "csv")).lower()
    delta_in = _number(raw, "delta_in", ONE_THIRD, float)
    p = _number(raw, "p", ONE_THIRD, float)
    seed = _number(raw, "seed", 7, int)
    workers = _number(raw, "workers", 1, int)

    schmidt = raw.get("schmidt", QuditCliConfig.schmidt)
    if isinstance(schmidt, str):
        schmidt = [s for s in schmidt.replace(",", " ").split() if s]
    try:
        schmidt = tuple(float(x) for x in schmidt)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key 'schmidt': cannot read {schmidt!r}") from exc

    return RunConfig(
        sweep=SweepConfig(
            p_min=_number(raw, "p_min", ONE_THIRD, float),
            p_max=_number(raw, "p_max", 1.0, float),
            p_step=_number(raw, "p_step", 0.01, float),
            delta_in=delta_in,
            c1=_number(raw, "c1", None, float),
            c2=_number(raw, "c2", None, float),
            c3=_number(raw, "c3", None, float),
            output_path=out_path,
            format=fmt,
            workers=workers,
        ),
        protocol=ProtocolConfig(
            n=_number(raw, "n", 100_000, int),
            p=p,
            delta_in=delta_in,
            seed=seed,
            json_path=Path(_expand_env(str(raw["json"]))) if raw.get("json") is not None else None,
            workers=workers,
        ),
        qudit=QuditCliConfig(
            d=_number(raw, "d", 2, int),
            schmidt=schmidt,
            m=_number(raw, "m", None, float),
            p=p,
            a=tuple(float(x) for x in raw["a"]) if raw.get("a") is not None else None,
        ),
        output_dir=output_dir,
        seed=seed,
        out=out_path,
        format=fmt,
    )
