"""Run configuration: a flat ``key = value`` text format with dotted sections.

Example::

    # comments start with '#'
    grid.d = 1
    grid.N = 128
    initial_condition = standing_wave
    initial_condition.amplitude = 1e-4
    initial_condition.mode = 2
    T_final = 4.0

Unknown keys are rejected; every value is validated and errors name the
offending key (and line, for parse errors).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ParawwError
from .grid import GridSpec

__all__ = ["ConfigError", "CurvatureExponentWarning", "RunConfig", "InitialCondition",
           "parse_config", "parse_config_text", "config_keys"]

IC_KINDS = ("rest", "standing_wave", "shear", "stream", "file")
DN_BOTTOMS = ("dirichlet0", "neumann0")
BACKENDS = ("direct", "factored", "both")


class ConfigError(ParawwError, ValueError):
    """Malformed or invalid configuration."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


class CurvatureExponentWarning(UserWarning):
    """``curvature_p <= 2d``: the continuation criterion asks for ``p > 2d``."""


@dataclass(frozen=True)
class InitialCondition:
    kind: str = "rest"
    amplitude: float = 1e-4
    mode: int = 1
    omega0: float = 0.0
    c: float = 0.0
    path: str = ""


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec = field(default_factory=GridSpec)
    initial_condition: InitialCondition = field(default_factory=InitialCondition)
    T_final: float = 1.0
    cfl_safety: float = 0.5
    dt: float = 0.0  # 0 selects the CFL rule
    c0: float = 0.5
    h0: float = 0.1
    tolerance: float = 1e-12
    curvature_p: float = 5.0
    sobolev_s: float = 2.0
    filter: bool = True
    residuals: bool = True
    snapshot_every: int = 0
    output_dir: str = "output"
    dn_bottom: str = "dirichlet0"
    elliptic_backend: str = "direct"

    def validate(self) -> "RunConfig":
        def need(ok: bool, key: str, msg: str):
            if not ok:
                raise ConfigError(msg, key=key)

        need(self.T_final > 0, "T_final", "must be > 0")
        need(self.cfl_safety > 0, "cfl_safety", "must be > 0")
        need(self.dt >= 0, "dt", "must be >= 0")
        need(self.c0 > 0, "c0", "must be > 0")
        need(0 < self.h0 < 1, "h0", "must lie in (0, 1)")
        need(self.tolerance > 0, "tolerance", "must be > 0")
        need(self.curvature_p >= 1, "curvature_p", "must be >= 1")
        need(self.snapshot_every >= 0, "snapshot_every", "must be >= 0")
        need(self.dn_bottom in DN_BOTTOMS, "dn_bottom", f"must be one of {DN_BOTTOMS}")
        need(self.elliptic_backend in BACKENDS, "elliptic_backend",
             f"must be one of {BACKENDS}")
        ic = self.initial_condition
        need(ic.kind in IC_KINDS, "initial_condition", f"must be one of {IC_KINDS}")
        if ic.kind == "standing_wave":
            need(ic.mode >= 1, "initial_condition.mode", "must be >= 1")
            need(abs(ic.amplitude) < 1 - self.h0, "initial_condition.amplitude",
                 "violates the depth bound 1 + eta >= h0")
        if ic.kind == "file":
            need(bool(ic.path), "initial_condition.path", "required for file initial data")
        if self.curvature_p <= 2 * self.grid.d:
            warnings.warn(f"curvature_p = {self.curvature_p} <= 2d = {2 * self.grid.d}; the "
                          "continuation criterion needs p > 2d", CurvatureExponentWarning,
                          stacklevel=3)
        return self


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# key -> value converter, grouped by destination
_GRID_KEYS = {"grid.d": int, "grid.N": int, "grid.L": float, "grid.Nz": int,
              "grid.dealias_fraction": float}
_IC_KEYS = {"initial_condition.amplitude": float, "initial_condition.mode": int,
            "initial_condition.omega0": float, "initial_condition.c": float,
            "initial_condition.path": str}
_TOP_KEYS = {"T_final": float, "cfl_safety": float, "dt": float, "c0": float, "h0": float,
             "tolerance": float, "curvature_p": float, "sobolev_s": float, "filter": _bool,
             "residuals": _bool, "snapshot_every": int, "output_dir": str,
             "dn_bottom": str, "elliptic_backend": str}


def parse_config_text(text: str, base_dir: Path | None = None) -> RunConfig:
    grid_kw, ic_kw, top_kw = {}, {}, {}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", line=lineno)
        if key in seen:
            raise ConfigError(f"duplicate key (first on line {seen[key]})", key=key, line=lineno)
        seen[key] = lineno
        if key == "initial_condition":
            ic_kw["kind"] = value
            continue
        for table, dest in ((_GRID_KEYS, grid_kw), (_IC_KEYS, ic_kw), (_TOP_KEYS, top_kw)):
            if key in table:
                try:
                    dest[key.rsplit(".", 1)[-1]] = table[key](value)
                except ValueError as exc:
                    raise ConfigError(f"bad value {value!r} ({exc})", key=key,
                                      line=lineno) from None
                break
        else:
            raise ConfigError("unknown key", key=key, line=lineno)
    try:
        grid = GridSpec(**grid_kw)
    except ValueError as exc:
        raise ConfigError(str(exc), key="grid") from None
    ic = InitialCondition(**ic_kw)
    if ic.kind == "file" and base_dir is not None and not Path(ic.path).is_absolute():
        ic = replace(ic, path=str(base_dir / ic.path))
    return RunConfig(grid=grid, initial_condition=ic, **top_kw).validate()


def parse_config(path: str | Path) -> RunConfig:
    """Read and validate a configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config_text(text, path.parent)


def config_keys() -> list[str]:
    """All accepted keys, for documentation and error messages."""
    return (list(_GRID_KEYS) + ["initial_condition"] + list(_IC_KEYS) + list(_TOP_KEYS))

