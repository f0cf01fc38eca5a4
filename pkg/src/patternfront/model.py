"""Parameter record, derived constants and the periodic spectral field container.

Transform normalization (used everywhere in the package): the forward
transform is the unnormalized real FFT, ``u_hat = rfft(u)``, and the inverse
divides by the number of grid points, ``u = irfft(u_hat, n)``.  Mode zero is
therefore the sum of the samples, ``u_hat[0] = n * mean(u)``.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

__all__ = [
    "ConfigError",
    "DomainError",
    "FieldPair",
    "ModelParams",
    "derived_delta",
    "forward_transform",
    "inverse_transform",
    "load_config",
    "make_grid",
    "params_from_mapping",
]


class DomainError(ValueError):
    """A parameter combination lies outside the domain of an operation."""


class ConfigError(ValueError):
    """Malformed or incomplete configuration file."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class ModelParams:
    """Scalar parameters of the coupled system.

    ``alpha = eps**2 * alpha0`` is the distance to onset and ``c = eps * c0``
    the front speed.  The critical wave number obeys ``kc**2 = 1 + eps*q0``.
    """

    alpha0: float
    c0: float
    gamma: float
    eps: float
    q0: float = 0.0
    x0: float = 0.0

    def __post_init__(self) -> None:
        for name in ("alpha0", "c0", "gamma", "eps", "q0", "x0"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise TypeError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.eps < 0:
            raise DomainError(f"eps must be >= 0, got {self.eps}")
        if self.alpha0 <= 0:
            raise DomainError(f"alpha0 must be > 0, got {self.alpha0}")
        if self.c0 <= 0:
            raise DomainError(f"c0 must be > 0, got {self.c0}")
        if not 0.0 <= self.x0 < 2 * math.pi:
            raise DomainError(f"x0 must lie in [0, 2*pi), got {self.x0}")
        if 1.0 + self.eps * self.q0 <= 0:
            raise DomainError("1 + eps*q0 must be positive")

    @property
    def alpha(self) -> float:
        return self.eps**2 * self.alpha0

    @property
    def c(self) -> float:
        return self.eps * self.c0

    @property
    def kc(self) -> float:
        if self.eps * self.q0 == 0.0:
            return 1.0
        return math.sqrt(1.0 + self.eps * self.q0)

    @property
    def delta(self) -> float:
        return derived_delta(self)

    def replace(self, **changes: Any) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


def derived_delta(params: ModelParams) -> float:
    """Return ``sqrt(c0**2 - 16*alpha0)``.

    Raises
    ------
    DomainError
        In the oscillatory regime ``c0**2 < 16*alpha0``.
    """
    disc = params.c0**2 - 16.0 * params.alpha0
    if disc < 0:
        raise DomainError(
            f"c0^2 - 16 alpha0 = {disc:.6g} < 0: oscillatory regime, no real Delta"
        )
    return math.sqrt(disc)


def forward_transform(f: np.ndarray) -> np.ndarray:
    return np.fft.rfft(f)


def inverse_transform(f_hat: np.ndarray, n: int) -> np.ndarray:
    return np.fft.irfft(f_hat, n)


def _hermitian(f_hat: np.ndarray, n: int) -> np.ndarray:
    # rfft storage: modes 0 and n/2 of a real field are real
    f_hat = np.array(f_hat, dtype=complex)
    f_hat[0] = f_hat[0].real
    if n % 2 == 0:
        f_hat[-1] = f_hat[-1].real
    return f_hat


@dataclass
class FieldPair:
    """Real periodic fields ``(u, v)`` stored by their rfft coefficients."""

    n_grid: int
    length: float
    u_hat: np.ndarray
    v_hat: np.ndarray
    time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        m = self.n_grid // 2 + 1
        if self.u_hat.shape != (m,) or self.v_hat.shape != (m,):
            raise ValueError(f"coefficient arrays must have shape ({m},)")
        self.u_hat = _hermitian(self.u_hat, self.n_grid)
        self.v_hat = _hermitian(self.v_hat, self.n_grid)

    @classmethod
    def from_physical(cls, u: np.ndarray, v: np.ndarray, length: float, time: float = 0.0) -> "FieldPair":
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError("u and v must be 1-D arrays of equal length")
        return cls(u.size, float(length), forward_transform(u), forward_transform(v), time)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n_grid) * (self.length / self.n_grid)

    @property
    def k(self) -> np.ndarray:
        """Angular wave numbers matching the rfft layout."""
        return 2 * np.pi * np.fft.rfftfreq(self.n_grid, d=self.length / self.n_grid)

    @property
    def u(self) -> np.ndarray:
        return inverse_transform(self.u_hat, self.n_grid)

    @property
    def v(self) -> np.ndarray:
        return inverse_transform(self.v_hat, self.n_grid)

    @property
    def mean_v(self) -> float:
        return float(self.v_hat[0].real) / self.n_grid

    def copy(self) -> "FieldPair":
        return FieldPair(self.n_grid, self.length, self.u_hat.copy(), self.v_hat.copy(),
                         self.time, dict(self.meta))

    def same_grid(self, other: "FieldPair") -> bool:
        return self.n_grid == other.n_grid and math.isclose(self.length, other.length, rel_tol=1e-14)


def make_grid(n_grid: int, n_periods: int, params: ModelParams) -> FieldPair:
    """Zero fields on ``n_periods`` pattern periods ``2*pi/kc``."""
    if isinstance(n_grid, bool) or int(n_grid) != n_grid:
        raise ValueError(f"n_grid must be an integer, got {n_grid!r}")
    n_grid = int(n_grid)
    if n_grid < 16 or n_grid & (n_grid - 1):
        raise ValueError(f"n_grid must be a power of two >= 16, got {n_grid}")
    if int(n_periods) != n_periods or n_periods < 1:
        raise ValueError(f"n_periods must be a positive integer, got {n_periods!r}")
    length = int(n_periods) * 2 * math.pi / params.kc
    zeros = np.zeros(n_grid // 2 + 1, dtype=complex)
    return FieldPair(n_grid, length, zeros, zeros.copy())


_REQUIRED = ("alpha0", "c0", "gamma", "eps")
_OPTIONAL = ("q0", "x0")


def params_from_mapping(table: Mapping[str, Any]) -> ModelParams:
    missing = [k for k in _REQUIRED if k not in table]
    if missing:
        raise ConfigError(f"missing required parameter(s): {', '.join(missing)}")
    unknown = sorted(set(table) - set(_REQUIRED) - set(_OPTIONAL))
    if unknown:
        raise ConfigError(f"unknown parameter {unknown[0]!r}", key=unknown[0])
    values = {}
    for key, value in table.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"parameter {key!r} must be a decimal number, got {value!r}", key=key)
        values[key] = float(value)
    try:
        return ModelParams(**values)
    except DomainError as exc:
        bad = next((k for k in values if str(exc).startswith(k)), None)
        raise ConfigError(str(exc), key=bad) from exc


def load_config(path: str | Path) -> ModelParams:
    """Read a flat TOML table of ``ModelParams`` fields.

    Syntax errors carry the line and column reported by the TOML parser.
    """
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib

    text = Path(path).read_text()
    try:
        table = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    nested = [k for k, v in table.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: expected a flat table, found section(s) {nested}")
    try:
        return params_from_mapping(table)
    except ConfigError as exc:
        where = ""
        if exc.key is not None:
            for lineno, line in enumerate(text.splitlines(), start=1):
                if re.match(rf"\s*{re.escape(exc.key)}\s*=", line):
                    where = f" (line {lineno})"
                    break
        raise ConfigError(f"{path}{where}: {exc}", key=exc.key) from exc
