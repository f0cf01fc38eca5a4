"""Reduced three-dimensional system on the center manifold.

In the slow variable ``xi`` the leading-order truncation reads::

    A'  = B
    B'  = (-alpha0 A - c0 B - A W0 + 3 (1 + gamma) A |A|^2) / 4
    W0' = -c0 W0 + 2 c0 gamma |A|^2

with complex ``A, B`` and real ``W0``.  Higher-order remainders in ``eps``
are not modeled.  Fixed points are the origin and the circle
``|A|^2 = alpha0/(3+gamma)``, ``B = 0``, ``W0 = 2 gamma alpha0/(3+gamma)``.
Linearizations use the real coordinates ``(Re A, Im A, Re B, Im B, W0)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .model import DomainError, ModelParams, derived_delta

__all__ = [
    "FixedPointInfo",
    "ReducedState",
    "ShootingResult",
    "Trajectory",
    "fixed_points",
    "jacobian",
    "limiting_rhs",
    "linearize",
    "lyapunov_H",
    "lyapunov_defect",
    "reduced_rhs",
    "rescale_to_limit",
    "shoot_heteroclinic",
]


@dataclass(frozen=True)
class ReducedState:
    A: complex
    B: complex
    W0: float

    def to_real(self) -> np.ndarray:
        return np.array([self.A.real, self.A.imag, self.B.real, self.B.imag, self.W0])

    @classmethod
    def from_real(cls, y) -> "ReducedState":
        return cls(complex(y[0], y[1]), complex(y[2], y[3]), float(y[4]))

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_real()))


def _rhs_real(y: np.ndarray, alpha0: float, c0: float, gamma: float) -> np.ndarray:
    ar, ai, br, bi, w = y
    a2 = ar * ar + ai * ai
    f = 3.0 * (1.0 + gamma) * a2 - alpha0 - w
    return np.array([
        br,
        bi,
        0.25 * (f * ar - c0 * br),
        0.25 * (f * ai - c0 * bi),
        -c0 * w + 2.0 * c0 * gamma * a2,
    ])


def reduced_rhs(s: ReducedState, params: ModelParams) -> ReducedState:
    """Vector field of the truncated reduced system (returned as a ``ReducedState``)."""
    a2 = abs(s.A) ** 2
    dB = 0.25 * (-params.alpha0 * s.A - params.c0 * s.B - s.A * s.W0
                 + 3.0 * (1.0 + params.gamma) * s.A * a2)
    dW = -params.c0 * s.W0 + 2.0 * params.c0 * params.gamma * a2
    return ReducedState(s.B, dB, dW)


def jacobian(s: ReducedState, params: ModelParams) -> np.ndarray:
    """Analytic 5x5 Jacobian in ``(Re A, Im A, Re B, Im B, W0)``."""
    ar, ai = s.A.real, s.A.imag
    a2 = ar * ar + ai * ai
    k = 3.0 * (1.0 + params.gamma)
    f = k * a2 - params.alpha0 - s.W0
    c0, g = params.c0, params.gamma
    J = np.zeros((5, 5))
    J[0, 2] = J[1, 3] = 1.0
    J[2, 0] = 0.25 * (f + 2 * k * ar * ar)
    J[2, 1] = 0.25 * (2 * k * ar * ai)
    J[3, 0] = 0.25 * (2 * k * ar * ai)
    J[3, 1] = 0.25 * (f + 2 * k * ai * ai)
    J[2, 2] = J[3, 3] = -0.25 * c0
    J[2, 4] = -0.25 * ar
    J[3, 4] = -0.25 * ai
    J[4, 0] = 4 * c0 * g * ar
    J[4, 1] = 4 * c0 * g * ai
    J[4, 4] = -c0
    return J


@dataclass
class FixedPointInfo:
    state: ReducedState
    classification: str  # "trivial" or "circle"
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None
    unstable_dir: np.ndarray | None = None
    jacobian: np.ndarray | None = None

    @property
    def signature(self) -> tuple[str, ...]:
        """Signs of the real parts (``+``, ``0``, ``-``) in descending order."""
        out = []
        for lam in self.eigenvalues:
            if abs(lam.real) <= 1e-10:
                out.append("0")
            else:
                out.append("+" if lam.real > 0 else "-")
        return tuple(out)


def fixed_points(params: ModelParams) -> list[FixedPointInfo]:
    """Origin plus the ``phi = 0`` representative of the circle (if ``gamma > -3``)."""
    pts = [FixedPointInfo(ReducedState(0j, 0j, 0.0), "trivial")]
    g = params.gamma
    if g > -3:
        a = math.sqrt(params.alpha0 / (3.0 + g))
        pts.append(FixedPointInfo(ReducedState(complex(a), 0j, 2.0 * g * params.alpha0 / (3.0 + g)), "circle"))
    else:
        warnings.warn(f"gamma = {g} <= -3: no circle of nontrivial fixed points", stacklevel=2)
    return pts


def linearize(at: FixedPointInfo, params: ModelParams) -> FixedPointInfo:
    """Fill eigenvalues (descending real part), eigenvectors and the unstable direction."""
    J = jacobian(at.state, params)
    w, V = np.linalg.eig(J)
    order = np.lexsort((-w.imag, -w.real))
    w, V = w[order], V[:, order]
    w = np.where(np.abs(w.imag) <= 1e-14 * (1 + np.abs(w.real)), w.real + 0j, w)
    at.jacobian = J
    at.eigenvalues = w
    at.eigenvectors = V
    unstable = np.flatnonzero(w.real > 1e-10)
    if unstable.size == 1:
        vec = np.real_if_close(V[:, unstable[0]], tol=1e6)
        vec = np.real(vec) if np.iscomplexobj(vec) else vec
        at.unstable_dir = vec / np.linalg.norm(vec)
    else:
        at.unstable_dir = None
    return at


def lyapunov_H(A: complex, B: complex, params: ModelParams) -> float:
    """``2|B|^2 + (alpha0/2)|A|^2 - (3/4)|A|^4``; decays as ``-c0 |B|^2`` when ``gamma = W0 = 0``."""
    a2 = abs(A) ** 2
    return 2.0 * abs(B) ** 2 + 0.5 * params.alpha0 * a2 - 0.75 * a2 * a2


def limiting_rhs(s: ReducedState, params: ModelParams) -> ReducedState:
    """Large-``gamma`` limit in the rescaled variables ``(A~, B~, W~)``.

    ``B~' = (-c0 B~ - alpha0 A~ - 2 alpha0 A~ W~ + 3 alpha0 A~ |A~|^2)/4`` and
    ``W~' = -c0 W~ + c0 |A~|^2``; fixed points at the origin and on ``|A~| = 1, W~ = 1``.
    """
    a2 = abs(s.A) ** 2
    a0, c0 = params.alpha0, params.c0
    dB = 0.25 * (-c0 * s.B - a0 * s.A - 2 * a0 * s.A * s.W0 + 3 * a0 * s.A * a2)
    return ReducedState(s.B, dB, -c0 * s.W0 + c0 * a2)


def rescale_to_limit(s: ReducedState, params: ModelParams) -> ReducedState:
    """``(A~, B~) = sqrt((3+gamma)/alpha0) (A, B)``, ``W~ = (3+gamma)/(2 alpha0 gamma) W0``."""
    g, a0 = params.gamma, params.alpha0
    r = math.sqrt((3 + g) / a0)
    return ReducedState(r * s.A, r * s.B, (3 + g) / (2 * a0 * g) * s.W0)


@dataclass
class Trajectory:
    """Dense solution ``xi -> (A, B, W0)``; constant trajectories have ``sol = None``."""

    xi: np.ndarray
    y: np.ndarray  # shape (5, len(xi))
    params: ModelParams
    sol: object | None = None
    constant_state: np.ndarray | None = None

    @classmethod
    def constant(cls, state: ReducedState, params: ModelParams) -> "Trajectory":
        y = state.to_real()
        return cls(np.array([0.0]), y[:, None], params, None, y)

    @property
    def xi_span(self) -> tuple[float, float]:
        if self.constant_state is not None:
            return (-math.inf, math.inf)
        return float(self.xi[0]), float(self.xi[-1])

    def evaluate(self, xi) -> np.ndarray:
        """Real state at ``xi`` (shape ``(5,) + shape(xi)``); no extrapolation."""
        xi = np.asarray(xi, dtype=float)
        if self.constant_state is not None:
            return np.broadcast_to(self.constant_state.reshape((5,) + (1,) * xi.ndim),
                                   (5,) + xi.shape).copy()
        if self.sol is not None:
            return self.sol(xi)
        return np.array([np.interp(xi, self.xi, row) for row in self.y])

    def states(self) -> list[ReducedState]:
        return [ReducedState.from_real(col) for col in self.y.T]

    def H(self) -> np.ndarray:
        A = self.y[0] + 1j * self.y[1]
        B = self.y[2] + 1j * self.y[3]
        return np.array([lyapunov_H(a, b, self.params) for a, b in zip(A, B)])


@dataclass
class ShootingResult:
    success: bool
    reason: str
    trajectory: Trajectory
    terminal_norm: float
    xi_end: float
    initial_state: ReducedState
    info: dict = field(default_factory=dict)


def shoot_heteroclinic(
    params: ModelParams,
    delta: float = 1e-5,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    tol_origin: float = 1e-6,
    method: str = "DOP853",
    n_samples: int = 2000,
) -> ShootingResult:
    """Follow the unstable manifold of the circle representative towards the origin.

    The start is ``circle + delta * e_u`` with the unit unstable eigenvector
    signed so that ``d|A|^2/dxi < 0``.  Integration stops when the state norm
    falls below ``tol_origin`` (success), exceeds ten times the circle norm,
    or ``xi`` reaches ``200 / min |Re lambda_stable|`` of the origin.
    """
    if params.c0**2 <= 16 * params.alpha0:
        raise DomainError("c0^2 > 16 alpha0 is required (monotone tails)")
    derived_delta(params)
    if params.gamma <= -3:
        raise DomainError("gamma > -3 is required for the circle of fixed points")
    if not 0 < delta <= 1e-2:
        raise ValueError("delta must lie in (0, 1e-2]")

    origin, circle = fixed_points(params)
    linearize(origin, params)
    linearize(circle, params)
    if circle.unstable_dir is None:
        return ShootingResult(False, "circle point has no one-dimensional unstable direction",
                              Trajectory(np.zeros(0), np.zeros((5, 0)), params), math.nan, 0.0,
                              circle.state)

    y_c = circle.state.to_real()
    e = circle.unstable_dir.copy()
    # the real slice is invariant and the Jacobian at a real base point decouples
    if y_c[1] == 0.0:
        e[[1, 3]] = 0.0
        e /= np.linalg.norm(e)
    # d|A|^2/dxi = 2 Re(conj(A) B); at the start B = delta * e_B
    if y_c[0] * e[2] + y_c[1] * e[3] > 0:
        e = -e
    y0 = y_c + delta * e

    stable = origin.eigenvalues.real[origin.eigenvalues.real < 0]
    xi_max = 200.0 / float(np.min(np.abs(stable)))
    escape = 10.0 * np.linalg.norm(y_c)
    a0, c0, g = params.alpha0, params.c0, params.gamma

    def fun(_, y):
        return _rhs_real(y, a0, c0, g)

    def hit_origin(_, y):
        return np.linalg.norm(y) - tol_origin

    hit_origin.terminal = True
    hit_origin.direction = -1

    def escaped(_, y):
        return np.linalg.norm(y) - escape

    escaped.terminal = True
    escaped.direction = 1

    sol = solve_ivp(fun, (0.0, xi_max), y0, method=method, rtol=rtol, atol=atol,
                    dense_output=True, events=(hit_origin, escaped))
    if sol.status == -1:
        reason = f"integrator failure: {sol.message}"
        success = False
    elif sol.t_events[0].size:
        reason, success = "reached origin", True
    elif sol.t_events[1].size:
        reason, success = "escaped", False
    else:
        reason, success = "xi_max reached", False

    xi_end = float(sol.t[-1])
    xi = np.linspace(0.0, xi_end, n_samples)
    y = sol.sol(xi)
    y[:, -1] = sol.y[:, -1]
    traj = Trajectory(xi, y, params, sol.sol)
    return ShootingResult(success, reason, traj, float(np.linalg.norm(sol.y[:, -1])), xi_end,
                          ReducedState.from_real(y0),
                          {"xi_max": xi_max, "nfev": sol.nfev, "eigenvalues": circle.eigenvalues})


def lyapunov_defect(traj: Trajectory, h: float = 1e-2) -> np.ndarray:
    """``dH/dxi + c0 |B|^2`` along a dense trajectory (five-point differences in ``xi``)."""
    if traj.sol is None:
        raise ValueError("a dense trajectory is required")
    lo, hi = traj.xi_span
    xi = traj.xi[(traj.xi >= lo + 2 * h) & (traj.xi <= hi - 2 * h)]
    p = traj.params

    def H(at):
        y = traj.evaluate(at)
        return 2 * (y[2] ** 2 + y[3] ** 2) + 0.5 * p.alpha0 * (y[0] ** 2 + y[1] ** 2) \
            - 0.75 * (y[0] ** 2 + y[1] ** 2) ** 2

    dH = (-H(xi + 2 * h) + 8 * H(xi + h) - 8 * H(xi - h) + H(xi - 2 * h)) / (12 * h)
    y = traj.evaluate(xi)
    return dH + p.c0 * (y[2] ** 2 + y[3] ** 2)
