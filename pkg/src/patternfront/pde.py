"""Pseudo-spectral time stepping and validation experiments.

Full system on a periodic box (rfft storage, see :mod:`patternfront.model`)::

    u_t = -(1 + d_x^2)^2 u + alpha u + u v - u^3
    v_t = d_x^2 v + gamma d_x^2 (u^2)

and the amplitude system in slow variables ``(X, T)``::

    A_T  = 4 A_XX + alpha0 A + A B0 - (3 + gamma) A |A|^2
    B0_T = B0_XX + 2 gamma (|A|^2)_XX

The linear parts are diagonal in Fourier space and handled implicitly
(``IMEX-1``: backward/forward Euler, ``IMEX-2``: Crank-Nicolson with
Adams-Bashforth-2) or exponentially (``ETD-RK``: fourth-order ETDRK4 with
contour-integral coefficients).  Nonlinear terms are dealiased by the 2/3 rule
on input and output.  Every update of the conserved variable carries a factor
``k^2``, so its mean is preserved bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.signal import hilbert

from .front import FrontProfile, assemble_front
from .model import DomainError, FieldPair, ModelParams, derived_delta
from .reduced import Trajectory, shoot_heteroclinic

__all__ = [
    "BlowUpError",
    "Diagnostics",
    "ResidualReport",
    "SCHEMES",
    "SimConfig",
    "ansatz_residual",
    "envelope",
    "fit_speed",
    "front_position",
    "run_amplitude_front",
    "run_front_experiment",
    "simulate",
    "simulate_amplitude",
    "step_amplitude",
    "step_full",
]

SCHEMES = ("IMEX-1", "IMEX-2", "ETD-RK")


class BlowUpError(RuntimeError):
    def __init__(self, message: str, time: float, norm: float):
        super().__init__(message)
        self.time = time
        self.norm = norm


@dataclass
class SimConfig:
    dt: float = 0.05
    t_end: float = 1.0
    scheme: str = "IMEX-2"
    dealias: bool = True
    record_every: int = 10
    alpha_override: float | None = None  # replaces eps^2 alpha0, e.g. for sub-onset runs
    blowup_norm: float = 1e6

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= self.dt:
            raise ValueError("t_end must be >= dt")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class Diagnostics:
    times: list = field(default_factory=list)
    mean_v: list = field(default_factory=list)
    u_norm: list = field(default_factory=list)
    v_norm: list = field(default_factory=list)
    front_position: list = field(default_factory=list)
    reconstruction_error: list = field(default_factory=list)
    speed: float | None = None
    pattern_amplitude: float | None = None
    reference_amplitude: float | None = None

    @property
    def conservation_drift(self) -> float:
        if not self.mean_v:
            return 0.0
        return float(np.max(np.abs(np.asarray(self.mean_v) - self.mean_v[0])))

    def rows(self) -> list[dict]:
        out = []
        for i, t in enumerate(self.times):
            row = {"t": t, "mean_v": self.mean_v[i], "u_norm": self.u_norm[i], "v_norm": self.v_norm[i]}
            if self.front_position:
                row["front_position"] = self.front_position[i]
            if self.reconstruction_error:
                row["reconstruction_error"] = self.reconstruction_error[i]
            out.append(row)
        return out


def _etd_coefficients(L: np.ndarray, h: float, n_contour: int = 32):
    r = np.exp(1j * np.pi * (np.arange(1, n_contour + 1) - 0.5) / n_contour)
    LR = h * L[..., None] + r
    E, E2 = np.exp(h * L), np.exp(0.5 * h * L)

    def mean(f):
        m = np.mean(f, axis=-1)
        return m.real if np.isrealobj(L) else m

    eLR = np.exp(LR)
    Q = h * mean((np.exp(0.5 * LR) - 1) / LR)
    f1 = h * mean((-4 - LR + eLR * (4 - 3 * LR + LR**2)) / LR**3)
    f2 = h * mean((2 + LR + eLR * (LR - 2)) / LR**3)
    f3 = h * mean((-4 - 3 * LR - LR**2 + eLR * (4 - LR)) / LR**3)
    return E, E2, Q, f1, f2, f3


class _Stepper:
    """Diagonal-linear / explicit-nonlinear integrator on stacked spectral arrays."""

    def __init__(self, L: np.ndarray, nonlinear: Callable[[np.ndarray], np.ndarray], dt: float, scheme: str):
        self.L, self.N, self.dt, self.scheme = L, nonlinear, dt, scheme
        self._prev = None
        if scheme == "IMEX-1":
            self._den = 1.0 / (1.0 - dt * L)
        elif scheme == "IMEX-2":
            self._num = 1.0 + 0.5 * dt * L
            self._den = 1.0 / (1.0 - 0.5 * dt * L)
        else:
            self._etd = _etd_coefficients(L, dt)

    def step(self, X: np.ndarray) -> np.ndarray:
        dt = self.dt
        if self.scheme == "IMEX-1":
            return (X + dt * self.N(X)) * self._den
        if self.scheme == "IMEX-2":
            n_now = self.N(X)
            n_old = n_now if self._prev is None else self._prev  # first step: N^{-1} = N^0
            self._prev = n_now
            return (self._num * X + dt * (1.5 * n_now - 0.5 * n_old)) * self._den
        E, E2, Q, f1, f2, f3 = self._etd
        Nx = self.N(X)
        a = E2 * X + Q * Nx
        Na = self.N(a)
        b = E2 * X + Q * Na
        Nb = self.N(b)
        c = E2 * a + Q * (2 * Nb - Nx)
        Nc = self.N(c)
        return E * X + Nx * f1 + 2 * (Na + Nb) * f2 + Nc * f3


def _dealias_mask(n_grid: int, full: bool = False) -> np.ndarray:
    """2/3 rule: keep wave-number indices ``|j| <= n_grid/3``."""
    j = np.abs(np.fft.fftfreq(n_grid, 1.0 / n_grid)) if full else np.arange(n_grid // 2 + 1)
    return j <= n_grid // 3


def _full_system(fields: FieldPair, params: ModelParams, cfg: SimConfig):
    n = fields.n_grid
    k = fields.k
    alpha = params.alpha if cfg.alpha_override is None else cfg.alpha_override
    L = np.stack([-((1.0 - k**2) ** 2) + alpha, -(k**2)])
    mask = _dealias_mask(n) if cfg.dealias else np.ones(k.size, dtype=bool)
    gk2 = -params.gamma * k**2

    def nonlinear(X):
        uh = X[0] * mask
        vh = X[1] * mask
        u = np.fft.irfft(uh, n)
        v = np.fft.irfft(vh, n)
        nu = np.fft.rfft(u * v - u**3) * mask
        nv = gk2 * np.fft.rfft(u * u) * mask
        return np.stack([nu, nv])

    return L, nonlinear


def _check(X: np.ndarray, t: float, limit: float, n_grid: int, half: bool = True) -> None:
    """Abort when the RMS of any component (from Parseval) exceeds ``limit`` or is not finite."""
    power = np.sum(np.abs(X) ** 2, axis=-1)
    if half:  # rfft storage holds each interior mode once
        power = 2 * power - np.abs(X[..., 0]) ** 2
    norm = float(np.sqrt(power.max()) / n_grid)
    if not math.isfinite(norm) or norm > limit:
        raise BlowUpError(f"blow-up at t = {t:.6g}: RMS norm {norm:.3g}", t, norm)


def step_full(fields: FieldPair, params: ModelParams, cfg: SimConfig) -> FieldPair:
    """Advance the full system by one step of ``cfg.dt``."""
    L, nonlinear = _full_system(fields, params, cfg)
    X = _Stepper(L, nonlinear, cfg.dt, cfg.scheme).step(np.stack([fields.u_hat, fields.v_hat]))
    t = fields.time + cfg.dt
    _check(X, t, cfg.blowup_norm, fields.n_grid)
    return FieldPair(fields.n_grid, fields.length, X[0], X[1], t, dict(fields.meta))


def simulate(
    fields: FieldPair,
    params: ModelParams,
    cfg: SimConfig,
    callback: Callable[[FieldPair, Diagnostics], None] | None = None,
) -> tuple[FieldPair, Diagnostics]:
    """Evolve for ``cfg.n_steps`` steps, recording diagnostics every ``record_every`` steps."""
    L, nonlinear = _full_system(fields, params, cfg)
    stepper = _Stepper(L, nonlinear, cfg.dt, cfg.scheme)
    n = fields.n_grid
    X = np.stack([fields.u_hat, fields.v_hat]).astype(complex)
    diag = Diagnostics()

    def record(t):
        cur = FieldPair(n, fields.length, X[0].copy(), X[1].copy(), t, dict(fields.meta))
        diag.times.append(t)
        diag.mean_v.append(cur.mean_v)
        diag.u_norm.append(float(np.max(np.abs(cur.u))))
        diag.v_norm.append(float(np.max(np.abs(cur.v))))
        if callback is not None:
            callback(cur, diag)
        return cur

    t0 = fields.time
    record(t0)
    steps = cfg.n_steps
    for i in range(1, steps + 1):
        X = stepper.step(X)
        t = t0 + i * cfg.dt
        _check(X, t, cfg.blowup_norm, n)
        if i % cfg.record_every == 0 or i == steps:
            record(t)
    final = FieldPair(n, fields.length, X[0], X[1], t0 + steps * cfg.dt, dict(fields.meta))
    return final, diag


# -- amplitude system -------------------------------------------------------

def _amplitude_system(n: int, length: float, params: ModelParams, cfg: SimConfig):
    K = 2 * np.pi * np.fft.fftfreq(n, d=length / n)
    L = np.stack([-4 * K**2 + params.alpha0, -(K**2)]).astype(complex)
    mask = _dealias_mask(n, full=True) if cfg.dealias else np.ones(n, dtype=bool)
    g = params.gamma

    def nonlinear(X):
        A = np.fft.ifft(X[0] * mask)
        B = np.fft.ifft(X[1] * mask).real
        a2 = (A * np.conj(A)).real
        nA = np.fft.fft(A * B - (3 + g) * A * a2) * mask
        nB = -2 * g * K**2 * np.fft.fft(a2) * mask
        return np.stack([nA, nB])

    return L, nonlinear


def step_amplitude(A: np.ndarray, B0: np.ndarray, params: ModelParams, cfg: SimConfig,
                   length: float) -> tuple[np.ndarray, np.ndarray]:
    """One step of the amplitude system for complex ``A`` and real ``B0`` on a periodic box."""
    A = np.asarray(A, dtype=complex)
    B0 = np.asarray(B0, dtype=float)
    if A.shape != B0.shape:
        raise ValueError("A and B0 must share the grid")
    L, nonlinear = _amplitude_system(A.size, length, params, cfg)
    X = _Stepper(L, nonlinear, cfg.dt, cfg.scheme).step(np.stack([np.fft.fft(A), np.fft.fft(B0)]))
    _check(X, cfg.dt, cfg.blowup_norm, A.size, half=False)
    return np.fft.ifft(X[0]), np.fft.ifft(X[1]).real


def simulate_amplitude(A: np.ndarray, B0: np.ndarray, params: ModelParams, cfg: SimConfig,
                       length: float, callback: Callable | None = None):
    """Evolve the amplitude system; ``callback(t, A, B0)`` runs every ``record_every`` steps."""
    A = np.asarray(A, dtype=complex)
    L, nonlinear = _amplitude_system(A.size, length, params, cfg)
    stepper = _Stepper(L, nonlinear, cfg.dt, cfg.scheme)
    X = np.stack([np.fft.fft(A), np.fft.fft(np.asarray(B0, dtype=float))])
    if callback is not None:
        callback(0.0, A, np.asarray(B0, dtype=float))
    for i in range(1, cfg.n_steps + 1):
        X = stepper.step(X)
        _check(X, i * cfg.dt, cfg.blowup_norm, A.size, half=False)
        if callback is not None and (i % cfg.record_every == 0 or i == cfg.n_steps):
            callback(i * cfg.dt, np.fft.ifft(X[0]), np.fft.ifft(X[1]).real)
    return np.fft.ifft(X[0]), np.fft.ifft(X[1]).real


# -- front diagnostics ------------------------------------------------------

def envelope(u: np.ndarray) -> np.ndarray:
    """Modulus of the analytic signal of a real periodic field."""
    return np.abs(hilbert(np.asarray(u, dtype=float)))


def front_position(x: np.ndarray, env: np.ndarray, level: float, length: float,
                   guess: float) -> float:
    """Down-crossing of ``env`` through ``level`` nearest to ``guess`` (periodic, interpolated)."""
    nxt = np.roll(env, -1)
    idx = np.flatnonzero((env >= level) & (nxt < level))
    if idx.size == 0:
        return math.nan
    dx = length / env.size
    pos = x[idx] + dx * (env[idx] - level) / (env[idx] - nxt[idx])
    dist = np.abs((pos - guess + 0.5 * length) % length - 0.5 * length)
    return float(pos[np.argmin(dist)] % length)


def fit_speed(times: Sequence[float], positions: Sequence[float], length: float,
              t_start: float = 0.0) -> float:
    """Least-squares slope of the unwrapped front position for ``t >= t_start``."""
    t = np.asarray(times, dtype=float)
    p = np.asarray(positions, dtype=float)
    ok = np.isfinite(p)
    t, p = t[ok], p[ok]
    p = np.unwrap(p * (2 * np.pi / length)) * (length / (2 * np.pi))
    sel = t >= t_start
    if sel.sum() < 2:
        return math.nan
    return float(np.polyfit(t[sel], p[sel], 1)[0])


def _front_preconditions(params: ModelParams) -> None:
    if params.c0**2 <= 16 * params.alpha0:
        raise DomainError("c0^2 > 16 alpha0 is required for the front pipeline")
    derived_delta(params)


def run_front_experiment(
    params: ModelParams,
    cfg: SimConfig,
    grid: FieldPair,
    traj: Trajectory | None = None,
    x_front: float | None = None,
    x_back: float = 0.0,
    fit_from: float | None = None,
) -> Diagnostics:
    """Evolve an assembled pattern slab ``[x_back, x_front]`` and track its right interface.

    Records ``mean(v)``, the front position (half the pattern amplitude on
    the demodulated envelope), the relative sup-distance to the translated
    reconstruction, the fitted speed (from ``t >= fit_from``, default
    ``t_end/3``) and the envelope level in the middle of the slab at the end.
    """
    _front_preconditions(params)
    if grid.length < 40 * 2 * math.pi / params.kc - 1e-9:
        raise DomainError("front runs need at least 40 pattern periods")
    if traj is None:
        shot = shoot_heteroclinic(params)
        if not shot.success:
            raise RuntimeError(f"shooting failed: {shot.reason}")
        traj = shot.trajectory
    prof = FrontProfile.from_trajectory(traj)
    if x_front is None:
        x_front = grid.length / 3.0
    fields = assemble_front(prof, params, 0.0, grid, x_front=x_front, x_back=x_back)
    level = params.eps * prof.A_left  # half of 2 eps |A*|
    x = grid.x
    L = grid.length
    state = {"guess": x_front}

    def on_record(cur: FieldPair, diag: Diagnostics):
        env = envelope(cur.u)
        pos = front_position(x, env, level, L, state["guess"])
        if math.isfinite(pos):
            state["guess"] = pos
        diag.front_position.append(pos)
        rec = assemble_front(prof, params, cur.time, grid, x_front=x_front, x_back=x_back).u
        diag.reconstruction_error.append(float(np.max(np.abs(cur.u - rec)) / max(np.max(np.abs(rec)), 1e-300)))
        state["env"] = env

    final, diag = simulate(fields, params, cfg, on_record)
    t_fit = cfg.t_end / 3.0 if fit_from is None else fit_from
    diag.speed = fit_speed(diag.times, diag.front_position, L, t_fit)

    # envelope level across the middle half of the slab at the final time
    travelled = (np.unwrap(np.asarray(diag.front_position) * 2 * np.pi / L) * L / (2 * np.pi))[-1] - x_front
    front_now = x_front + travelled
    back_now = x_back - travelled
    width = front_now - back_now
    rel = (x - back_now) % L
    inside = (rel >= 0.25 * width) & (rel <= 0.75 * width)
    diag.pattern_amplitude = float(np.mean(state["env"][inside]))
    diag.reference_amplitude = 2.0 * params.eps * prof.A_left
    return diag


def run_amplitude_front(params: ModelParams, cfg: SimConfig, length: float = 200.0,
                        n_grid: int = 1024, traj: Trajectory | None = None) -> float:
    """Front speed of the amplitude system (slow units) started from the reduced profile."""
    _front_preconditions(params)
    if traj is None:
        traj = shoot_heteroclinic(params).trajectory
    prof = FrontProfile.from_trajectory(traj)
    X = np.arange(n_grid) * (length / n_grid)
    x_front = length / 3.0
    d_f = (X - x_front + 0.5 * length) % length - 0.5 * length
    d_b = (0.0 - X + 0.5 * length) % length - 0.5 * length
    y = np.where(np.abs(d_f) <= np.abs(d_b), d_f, d_b)
    a, w0 = prof.envelopes(y)
    A = a.astype(complex)
    B0 = w0 - 2 * params.gamma * a**2
    level = 0.5 * prof.A_left
    times, pos = [], []
    guess = {"g": x_front}

    def cb(t, A_, _):
        p = front_position(X, np.abs(A_), level, length, guess["g"])
        if math.isfinite(p):
            guess["g"] = p
        times.append(t)
        pos.append(p)

    simulate_amplitude(A, B0, params, cfg, length, cb)
    return fit_speed(times, pos, length, cfg.t_end / 3.0)


# -- ansatz residual --------------------------------------------------------

@dataclass
class ResidualReport:
    eps: np.ndarray
    res_u: np.ndarray
    res_v: np.ndarray
    slope_u: float
    slope_v: float


def _jets(traj: Trajectory, params: ModelParams, xi: np.ndarray) -> dict:
    """Derivatives of the real-slice envelope ``a`` and of ``w`` from the reduced vector field."""
    a0, c0, g = params.alpha0, params.c0, params.gamma
    y = traj.evaluate(xi)
    if traj.constant_state is not None:
        a, w = y[0], y[4]
        z = np.zeros_like(a)
        return {"a": [a, z, z, z, z], "w": [w, z, z]}
    a, b, w = y[0], y[2], y[4]
    k = 3.0 * (1.0 + g)
    gg = 0.25 * (-a0 * a - c0 * b - a * w + k * a**3)
    w1 = -c0 * w + 2 * c0 * g * a * a
    a3 = 0.25 * (-a0 * b - c0 * gg - b * w - a * w1 + 3 * k * a * a * b)
    w2 = -c0 * w1 + 4 * c0 * g * a * b
    a4 = 0.25 * (-a0 * gg - c0 * a3 - gg * w - 2 * b * w1 - a * w2 + 3 * k * (2 * a * b * b + a * a * gg))
    return {"a": [a, b, gg, a3, a4], "w": [w, w1, w2]}


def _dxx(F: list, m: int, eps: float, phase: np.ndarray) -> np.ndarray:
    """``d_x^2 [F(eps x) cos(m x)]`` for jets ``F = [F, F', F'']``."""
    return (eps**2 * F[2] - m * m * F[0]) * np.cos(m * phase) - 2 * eps * m * F[1] * np.sin(m * phase)


def ansatz_residual(params: ModelParams, eps_list: Sequence[float], traj: Trajectory | None = None,
                    n_phase: int = 64) -> ResidualReport:
    """Sup-norm residuals of the leading-order front in the full system, for each ``eps``.

    The fields ``u = 2 eps a(y) cos x``,
    ``v = eps^2 [w - 2 gamma a^2 - 2 gamma a^2 cos 2x]`` with
    ``y = eps x - eps^2 c0 t`` are substituted term by term; ``d_t`` acts as
    ``-eps^2 c0 d_y`` and every ``y``-derivative of the trajectory is taken
    from the reduced vector field.  The trajectory must lie in the real slice.
    """
    if params.eps * params.q0 != 0:
        raise DomainError("the residual check assumes kc = 1")
    if traj is None:
        traj = shoot_heteroclinic(params).trajectory
    if traj.constant_state is None and np.max(np.abs(traj.y[[1, 3]])) > 0:
        raise ValueError("trajectory leaves the real slice")
    xi = traj.xi
    J = _jets(traj, params, xi)
    a, a1, a2, a3, a4 = J["a"]
    w, w1, w2 = J["w"]
    a0, c0, g = params.alpha0, params.c0, params.gamma
    phase = np.linspace(0.0, 2 * np.pi, n_phase, endpoint=False)[:, None] + params.x0

    sq = [a * a, 2 * a * a1, 2 * a1 * a1 + 2 * a * a2]  # jets of a^2
    res_u, res_v = [], []
    for eps in eps_list:
        cos1, sin1 = np.cos(phase), np.sin(phase)
        u = 2 * eps * a * cos1
        v0 = [eps**2 * (w - 2 * g * sq[0]), eps**2 * (w1 - 2 * g * sq[1]), eps**2 * (w2 - 2 * g * sq[2])]
        v1 = [-2 * g * eps**2 * s for s in sq]
        v = v0[0] + v1[0] * np.cos(2 * phase)
        # (1 + d_x^2)^2 (2 a cos x) = 2 Re(e^{ix} (-4 eps^2 a'' + 4 i eps^3 a''' + eps^4 a''''))
        sh = 2 * ((-4 * eps**2 * a2 + eps**4 * a4) * cos1 - 4 * eps**3 * a3 * sin1)
        u_t = -(eps**2) * c0 * 2 * eps * a1 * cos1
        rhs_u = -eps * sh + eps**2 * a0 * u + u * v - u**3
        res_u.append(float(np.max(np.abs(rhs_u - u_t))))

        u2 = [2 * eps**2 * s for s in sq]  # u^2 = 2 eps^2 a^2 (1 + cos 2x)
        v_t = -(eps**2) * c0 * (v0[1] + v1[1] * np.cos(2 * phase))
        rhs_v = _dxx(v0, 0, eps, phase) + _dxx(v1, 2, eps, phase) \
            + g * (_dxx(u2, 0, eps, phase) + _dxx(u2, 2, eps, phase))
        res_v.append(float(np.max(np.abs(rhs_v - v_t))))

    eps_arr = np.asarray(eps_list, dtype=float)
    ru, rv = np.asarray(res_u), np.asarray(res_v)

    def slope(r):
        if np.any(r <= 0) or eps_arr.size < 2:
            return math.nan
        return float(np.polyfit(np.log(eps_arr), np.log(r), 1)[0])

    return ResidualReport(eps_arr, ru, rv, slope(ru), slope(rv))
