"""Parameter-file parsing, defaulting and validation.

The on-disk format is one ``key = value`` pair per line.  Lines starting
with ``#``, ``//`` or ``[`` are ignored, as is blank space around keys and
values.  Unknown keys are kept out of the config and reported through the
:mod:`warnings` machinery so a driver can surface them without dying.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, fields

__all__ = [
    "Config",
    "ConfigError",
    "ConfigWarning",
    "ValidationReport",
    "parse_config",
    "validate",
    "to_text",
]

DEFAULT_MEM_BUDGET_BYTES = 2**30

_COMMENT_PREFIXES = ("#", "//", "[")

# key -> python type used when binding values
_INT_KEYS = {
    "nx", "ny", "nz", "border", "ns", "n_src", "stencil", "lbfgsb",
    "n_iter", "max_viter", "gradient_preconditioning_mode",
    "zeroes_nplanes_gradient", "chk_verb", "ws_flag", "mem_budget_bytes",
}
_FLOAT_KEYS = {
    "dx", "dy", "dz", "ox", "oy", "oz", "dt", "fpeak", "amplitude",
    "lbfgsb_lower_bound", "lbfgsb_upper_bound", "check_mem",
    "bessel_filter_lx", "bessel_filter_ly", "bessel_filter_lz",
}
_STR_KEYS = {"proj_dir", "vel", "density", "ft_config", "fwi_config"}

_MANDATORY = (
    "nx", "ny", "nz", "dx", "dy", "dz", "ox", "oy", "oz", "border",
    "ns", "dt", "fpeak", "amplitude", "n_src", "proj_dir", "vel",
)


class ConfigError(ValueError):
    """Raised for unparseable, missing or duplicated parameters."""


class ConfigWarning(UserWarning):
    """Emitted for unknown keys and ignored fault-tolerance parameters."""


@dataclass(frozen=True)
class Config:
    """Immutable bag of run parameters shared by modeling and FWI."""

    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    ox: float
    oy: float
    oz: float
    border: int
    ns: int
    dt: float
    fpeak: float
    amplitude: float
    n_src: int
    proj_dir: str
    vel: str
    density: str | None = None
    stencil: int = 4
    lbfgsb: int = 0
    lbfgsb_lower_bound: float | None = None
    lbfgsb_upper_bound: float | None = None
    n_iter: int = 999
    max_viter: int = 100
    gradient_preconditioning_mode: int = 0
    bessel_filter_lx: float | None = None
    bessel_filter_ly: float | None = None
    bessel_filter_lz: float | None = None
    zeroes_nplanes_gradient: int = 0
    check_mem: float = 0.8
    chk_verb: int = 0
    ws_flag: int = 0
    mem_budget_bytes: int = DEFAULT_MEM_BUDGET_BYTES
    ft_config: str | None = None
    fwi_config: str | None = None

    def __post_init__(self) -> None:
        # smoothing lengths default to twice the grid spacing
        if self.bessel_filter_lx is None:
            object.__setattr__(self, "bessel_filter_lx", 2.0 * self.dx)
        if self.bessel_filter_ly is None:
            object.__setattr__(self, "bessel_filter_ly", 2.0 * self.dy)
        if self.bessel_filter_lz is None:
            object.__setattr__(self, "bessel_filter_lz", 2.0 * self.dz)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _bind(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"value for '{key}' is not a valid "
                          f"{'integer' if key in _INT_KEYS else 'number'}: {raw!r}") from None


def parse_config(text) -> Config:
    """Parse ``key = value`` text (a string or a readable) into a Config.

    Raises :class:`ConfigError` on missing mandatory keys, duplicated keys
    or values of the wrong type.  Unknown keys produce a
    :class:`ConfigWarning` and are dropped.
    """
    if hasattr(text, "read"):
        text = text.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")

    bound: dict[str, object] = {}
    for lineno, line in enumerate(io.StringIO(text), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(_COMMENT_PREFIXES):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key in bound:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        if key not in _INT_KEYS and key not in _FLOAT_KEYS and key not in _STR_KEYS:
            warnings.warn(f"unknown parameter '{key}' ignored", ConfigWarning, stacklevel=2)
            continue
        bound[key] = _bind(key, raw)

    missing = [key for key in _MANDATORY if key not in bound]
    if missing:
        raise ConfigError("missing mandatory parameters: " + ", ".join(missing))

    for key in ("ft_config", "fwi_config"):
        if key in bound:
            warnings.warn(f"'{key}' accepted but fault tolerance is not supported; ignored",
                          ConfigWarning, stacklevel=2)

    return Config(**bound)


def validate(cfg: Config) -> ValidationReport:
    """Collect every constraint violation of ``cfg`` into a report.

    The propagator's CFL check is separate; this covers the static
    parameter constraints only.
    """
    bad: list[str] = []

    for name in ("nx", "ny", "nz"):
        n = getattr(cfg, name)
        if n < 2 * cfg.stencil + 1:
            bad.append(f"{name} = {n} must be >= 2*stencil+1 = {2 * cfg.stencil + 1}")
    for name in ("dx", "dy", "dz"):
        if getattr(cfg, name) <= 0:
            bad.append(f"{name} must be positive")
    if cfg.border < 0:
        bad.append("border must be nonnegative")
    if cfg.ns < 1:
        bad.append("ns must be >= 1")
    if cfg.dt <= 0:
        bad.append("dt must be positive")
    if cfg.fpeak <= 0:
        bad.append("fpeak must be positive")
    if cfg.n_src < 1:
        bad.append("n_src must be >= 1")
    if not 1 <= cfg.stencil <= 8:
        bad.append("stencil must be in 1..8")

    if cfg.lbfgsb not in (0, 1, 2, 3):
        bad.append(f"lbfgsb = {cfg.lbfgsb} not in {{0,1,2,3}}")
    if cfg.lbfgsb in (1, 2) and cfg.lbfgsb_lower_bound is None:
        bad.append("lower bound required for lbfgsb mode "
                   f"{cfg.lbfgsb} (set lbfgsb_lower_bound)")
    if cfg.lbfgsb in (2, 3) and cfg.lbfgsb_upper_bound is None:
        bad.append("upper bound required for lbfgsb mode "
                   f"{cfg.lbfgsb} (set lbfgsb_upper_bound)")
    if (cfg.lbfgsb_lower_bound is not None and cfg.lbfgsb_upper_bound is not None
            and not cfg.lbfgsb_lower_bound < cfg.lbfgsb_upper_bound):
        bad.append("lbfgsb_lower_bound must be < lbfgsb_upper_bound")

    if cfg.gradient_preconditioning_mode not in (0, 1, 2):
        bad.append("gradient_preconditioning_mode must be 0 (none), 1 (bessel) or 2 (laplace)")
    if cfg.zeroes_nplanes_gradient < 0:
        bad.append("zeroes_nplanes_gradient must be nonnegative")
    if not 0.0 < cfg.check_mem <= 1.0:
        bad.append(f"check_mem = {cfg.check_mem} not in (0, 1]")
    if cfg.chk_verb not in (0, 1):
        bad.append("chk_verb must be 0 or 1")
    if cfg.ws_flag not in (0, 1):
        bad.append("ws_flag must be 0 or 1")
    if cfg.mem_budget_bytes <= 0:
        bad.append("mem_budget_bytes must be positive")
    if cfg.n_iter < 0:
        bad.append("n_iter must be nonnegative")
    if cfg.max_viter < 0:
        bad.append("max_viter must be nonnegative")

    return ValidationReport(tuple(bad))


def to_text(cfg: Config) -> str:
    """Serialize to ``key = value`` lines; re-parsing yields an equal Config."""
    lines = []
    for f in fields(Config):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        lines.append(f"{f.name} = {value!r}" if isinstance(value, float) else f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
