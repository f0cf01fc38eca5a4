"""Stationary spatially periodic solutions bifurcating from the ground state.

The truncated Fourier system for ``u = sum u_n e^{i n kc x}``,
``v = sum v_n e^{i n kc x}`` (``|n| <= N``) is

    0 = (-(1 - (n kc)^2)^2 + alpha) u_n + (u v - u^3)_n
    0 = -(n kc)^2 (v_n + gamma (u^2)_n),      n != 0,

with ``v_0 = 0`` removed from the unknowns.  Products are projected exactly
(pseudo-spectrally on ``M > 4N`` points).  Coefficients are treated as
independent complex unknowns, and the translation family is pinned by
``u_1 e^{-i theta} = u_{-1} e^{i theta}`` with ``theta = kc x0``, which for
real fields is ``Im(u_1 e^{-i theta}) = 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import toeplitz

from .model import DomainError, FieldPair, ModelParams, make_grid

__all__ = [
    "ConvergenceError",
    "PeriodicEquilibrium",
    "SingularJacobianError",
    "amplitude_fixed_point",
    "embed",
    "galerkin_residual",
    "leading_order",
    "newton_refine",
    "shift",
    "to_fields",
]


class ConvergenceError(RuntimeError):
    """Newton iteration did not reach the requested tolerance."""


class SingularJacobianError(RuntimeError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


@dataclass
class PeriodicEquilibrium:
    """Coefficients indexed ``n = -N..N`` (array position ``n + N``)."""

    n_modes: int
    u_coeffs: np.ndarray
    v_coeffs: np.ndarray
    params: ModelParams
    residual_norm: float | None = None
    iterations: int = 0
    condition: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n_modes, self.n_modes + 1)

    def coeff(self, which: str, n: int) -> complex:
        arr = self.u_coeffs if which == "u" else self.v_coeffs
        return complex(arr[n + self.n_modes]) if abs(n) <= self.n_modes else 0j

    @property
    def u_amplitude(self) -> float:
        """Amplitude ``2|u_1|`` of the fundamental."""
        return 2.0 * abs(self.coeff("u", 1))

    def sample(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        phase = np.exp(1j * self.params.kc * np.outer(x, self.modes))
        return (phase @ self.u_coeffs).real, (phase @ self.v_coeffs).real

    def to_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "params": self.params.as_dict(),
            "u_re": self.u_coeffs.real.tolist(),
            "u_im": self.u_coeffs.imag.tolist(),
            "v_re": self.v_coeffs.real.tolist(),
            "v_im": self.v_coeffs.imag.tolist(),
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "condition": self.condition,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PeriodicEquilibrium":
        return cls(
            n_modes=int(d["n_modes"]),
            u_coeffs=np.asarray(d["u_re"]) + 1j * np.asarray(d["u_im"]),
            v_coeffs=np.asarray(d["v_re"]) + 1j * np.asarray(d["v_im"]),
            params=ModelParams(**d["params"]),
            residual_norm=d.get("residual_norm"),
            iterations=int(d.get("iterations", 0)),
            condition=d.get("condition"),
        )

    def dump_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def _check_existence(params: ModelParams) -> None:
    if params.gamma <= -3:
        raise DomainError(
            f"gamma = {params.gamma} <= -3: no small-amplitude stationary periodic solutions"
        )
    if params.q0**2 >= params.alpha0:
        raise DomainError(f"q0^2 = {params.q0**2} must be below alpha0 = {params.alpha0}")


def amplitude_fixed_point(params: ModelParams) -> float:
    """``sqrt((alpha0 - q0^2)/(3 + gamma))``, the modulus of the stationary envelope."""
    if params.gamma <= -3:
        raise DomainError(f"gamma = {params.gamma} <= -3")
    if params.q0**2 > params.alpha0:
        raise DomainError("q0^2 exceeds alpha0: outside the existence band")
    return math.sqrt((params.alpha0 - params.q0**2) / (3.0 + params.gamma))


def leading_order(params: ModelParams, n_modes: int = 16) -> PeriodicEquilibrium:
    """Fundamental of ``u`` and second harmonic of ``v`` at leading order in ``eps``."""
    _check_existence(params)
    if n_modes < 2:
        raise ValueError("n_modes must be >= 2")
    eps, g = params.eps, params.gamma
    amp = amplitude_fixed_point(params)
    theta = params.kc * params.x0
    u = np.zeros(2 * n_modes + 1, dtype=complex)
    v = np.zeros_like(u)
    u[n_modes + 1] = eps * amp * np.exp(1j * theta)
    u[n_modes - 1] = eps * amp * np.exp(-1j * theta)
    v2 = -(eps**2) * g * amp**2
    v[n_modes + 2] = v2 * np.exp(2j * theta)
    v[n_modes - 2] = v2 * np.exp(-2j * theta)
    return PeriodicEquilibrium(n_modes, u, v, params)


def _grid_size(n_modes: int) -> int:
    return 4 * n_modes + 4


def _to_grid(c: np.ndarray, m: int) -> np.ndarray:
    n_modes = (c.size - 1) // 2
    buf = np.zeros(m, dtype=complex)
    buf[np.arange(-n_modes, n_modes + 1) % m] = c
    return np.fft.ifft(buf) * m


def _from_grid(f: np.ndarray, n_max: int) -> np.ndarray:
    m = f.size
    return (np.fft.fft(f) / m)[np.arange(-n_max, n_max + 1) % m]


def _linear_symbol(params: ModelParams, n_modes: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(-n_modes, n_modes + 1) * params.kc
    return -((1.0 - k**2) ** 2) + params.alpha, -(k**2)


def galerkin_residual(u: np.ndarray, v: np.ndarray, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Residual vectors of the truncated system (``v`` residual at ``n = 0`` is identically 0)."""
    n_modes = (u.size - 1) // 2
    m = _grid_size(n_modes)
    ug, vg = _to_grid(u, m), _to_grid(v, m)
    lu, lv = _linear_symbol(params, n_modes)
    ru = lu * u + _from_grid(ug * vg - ug**3, n_modes)
    rv = lv * (v + params.gamma * _from_grid(ug**2, n_modes))
    return ru, rv


def _residual_norm(u, v, params) -> float:
    ru, rv = galerkin_residual(u, v, params)
    return float(max(np.max(np.abs(ru)), np.max(np.abs(rv))))


def _toeplitz(c: np.ndarray, n_modes: int) -> np.ndarray:
    # T[n, k] = c_{n-k} for n, k in -N..N; c holds modes -2N..2N
    mid = 2 * n_modes
    return toeplitz(c[mid: mid + 2 * n_modes + 1], c[mid::-1][: 2 * n_modes + 1])


def _jacobian(u, v, params) -> np.ndarray:
    n_modes = (u.size - 1) // 2
    m = _grid_size(n_modes)
    ug, vg = _to_grid(u, m), _to_grid(v, m)
    lu, lv = _linear_symbol(params, n_modes)
    t_uu = _toeplitz(_from_grid(vg - 3 * ug**2, 2 * n_modes), n_modes)
    t_uv = _toeplitz(_from_grid(ug, 2 * n_modes), n_modes)
    t_2u = _toeplitz(_from_grid(2 * ug, 2 * n_modes), n_modes)
    j_uu = np.diag(lu) + t_uu
    j_uv = t_uv
    j_vu = lv[:, None] * params.gamma * t_2u
    j_vv = np.diag(lv)
    keep = np.arange(2 * n_modes + 1) != n_modes  # drop v_0 row and column
    top = np.hstack([j_uu, j_uv[:, keep]])
    bottom = np.hstack([j_vu[keep], j_vv[np.ix_(keep, keep)]])
    return np.vstack([top, bottom])


def _symmetrize(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c + np.conj(c[::-1]))


def newton_refine(start: PeriodicEquilibrium, tol: float = 1e-12, max_iter: int = 30) -> PeriodicEquilibrium:
    """Solve the truncated stationary system by Newton's method.

    Raises
    ------
    ConvergenceError
        The residual is still above ``tol`` after ``max_iter`` steps.
    SingularJacobianError
        The Jacobian condition estimate exceeds ``1e14``.
    """
    if tol < 1e-13:
        raise ValueError("tol must be >= 1e-13")
    params = start.params
    n_modes = start.n_modes
    u = _symmetrize(np.array(start.u_coeffs, dtype=complex))
    v = _symmetrize(np.array(start.v_coeffs, dtype=complex))
    v[n_modes] = 0.0
    keep = np.arange(2 * n_modes + 1) != n_modes
    theta = params.kc * params.x0
    pin = np.zeros(4 * n_modes + 1, dtype=complex)
    pin[n_modes + 1] = np.exp(-1j * theta)
    pin[n_modes - 1] = -np.exp(1j * theta)

    res = _residual_norm(u, v, params)
    cond = None
    it = 0
    while res > tol:
        if it >= max_iter:
            raise ConvergenceError(f"Newton stalled at residual {res:.3e} after {max_iter} iterations")
        ru, rv = galerkin_residual(u, v, params)
        J = np.vstack([_jacobian(u, v, params), pin])
        cond = float(np.linalg.cond(J))
        if not cond < 1e14:
            raise SingularJacobianError(f"Jacobian condition estimate {cond:.3e}", cond)
        F = np.concatenate([ru, rv[keep], [pin[: 2 * n_modes + 1] @ u]])
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        u = _symmetrize(u + step[: 2 * n_modes + 1])
        v[keep] += step[2 * n_modes + 1:]
        v = _symmetrize(v)
        v[n_modes] = 0.0
        res = _residual_norm(u, v, params)
        it += 1
        if not math.isfinite(res):
            raise ConvergenceError("Newton iterate became non-finite")
    return PeriodicEquilibrium(n_modes, u, v, params, residual_norm=res, iterations=it, condition=cond)


def embed(eq: PeriodicEquilibrium, n_modes: int) -> PeriodicEquilibrium:
    """Zero-pad (or truncate) to ``n_modes`` and recompute the residual there."""
    def pad(c):
        out = np.zeros(2 * n_modes + 1, dtype=complex)
        m = min(n_modes, eq.n_modes)
        out[n_modes - m: n_modes + m + 1] = c[eq.n_modes - m: eq.n_modes + m + 1]
        return out

    u, v = pad(eq.u_coeffs), pad(eq.v_coeffs)
    return PeriodicEquilibrium(n_modes, u, v, eq.params, residual_norm=_residual_norm(u, v, eq.params))


def shift(eq: PeriodicEquilibrium, dx: float) -> PeriodicEquilibrium:
    """Translate: the returned fields are ``u(x + dx)``, ``v(x + dx)``."""
    phase = np.exp(1j * eq.params.kc * eq.modes * dx)
    return PeriodicEquilibrium(eq.n_modes, eq.u_coeffs * phase, eq.v_coeffs * phase, eq.params,
                               eq.residual_norm, eq.iterations, eq.condition)


def to_fields(eq: PeriodicEquilibrium, n_grid: int, n_periods: int = 1) -> FieldPair:
    """Sample on a ``make_grid`` domain of ``n_periods`` periods."""
    grid = make_grid(n_grid, n_periods, eq.params)
    if eq.n_modes * n_periods >= n_grid // 2:
        raise ValueError("grid too coarse for the truncation")
    u, v = eq.sample(grid.x)
    return FieldPair.from_physical(u, v, grid.length)
