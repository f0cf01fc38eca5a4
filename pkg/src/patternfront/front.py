"""Leading-order modulating front fields built from a reduced trajectory.

With ``y = eps x - eps^2 c0 t`` (shifted so the interface sits at a chosen
position) the fields are

    u_f = 2 eps |A(y)| cos(kc (x + x0))
    v_f = eps^2 [W0(y) - 2 gamma |A|^2 - 2 gamma |A|^2 cos(2 kc (x + x0))]

so the envelopes are ``U = 2|A|``, ``V0 = W0 - 2 gamma |A|^2`` and
``V1 = -2 gamma |A|^2``.  The second line is ``w - gamma u^2`` with
``w = eps^2 W0`` after averaging, which is the map between the conserved
variable ``v`` and ``w = v + gamma u^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .model import FieldPair, ModelParams
from .reduced import Trajectory, fixed_points

__all__ = [
    "CoverageError",
    "FrontProfile",
    "assemble_front",
    "v_to_w",
    "w_to_v",
]


class CoverageError(ValueError):
    """The trajectory does not reach its limiting fixed points on the requested range."""


def _as_array(f) -> np.ndarray:
    return f.u if isinstance(f, FieldPair) else np.asarray(f, dtype=float)


def w_to_v(u, w, gamma: float) -> np.ndarray:
    """``v = w - gamma u^2``."""
    u, w = np.asarray(u, dtype=float), np.asarray(w, dtype=float)
    if u.shape != w.shape:
        raise ValueError(f"grid mismatch: {u.shape} vs {w.shape}")
    return w - gamma * u * u


def v_to_w(u, v, gamma: float) -> np.ndarray:
    """``w = v + gamma u^2``."""
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"grid mismatch: {u.shape} vs {v.shape}")
    return v + gamma * u * u


@dataclass
class FrontProfile:
    """Envelope samples in the slow variable, ``y = 0`` at the half-amplitude point."""

    y_samples: np.ndarray
    A_abs: np.ndarray
    W0: np.ndarray
    params: ModelParams
    A_left: float
    W_left: float
    A_right: float = 0.0
    W_right: float = 0.0

    @classmethod
    def from_trajectory(cls, traj: Trajectory, clamp_tol: float = 1e-3) -> "FrontProfile":
        params = traj.params
        _, circle = fixed_points(params)
        a_star = abs(circle.state.A)
        w_star = circle.state.W0
        if traj.constant_state is not None:
            y = traj.constant_state
            a = math.hypot(y[0], y[1])
            return cls(np.array([0.0]), np.array([a]), np.array([y[4]]), params, a, y[4], a, y[4])

        A = np.hypot(traj.y[0], traj.y[1])
        W = traj.y[4]
        if abs(A[0] - a_star) > clamp_tol * a_star or abs(A[-1]) > clamp_tol * a_star:
            raise CoverageError(
                f"trajectory runs from |A| = {A[0]:.3g} to {A[-1]:.3g} over "
                f"xi in [{traj.xi[0]:.3g}, {traj.xi[-1]:.3g}]; it must start at the circle "
                f"(|A| = {a_star:.3g}) and end at the origin"
            )
        half = np.flatnonzero(np.diff(np.sign(A - 0.5 * a_star)) != 0)
        if half.size == 0:
            raise CoverageError("trajectory never crosses half the pattern amplitude")
        i = half[0]
        xi_half = traj.xi[i] + (0.5 * a_star - A[i]) * (traj.xi[i + 1] - traj.xi[i]) / (A[i + 1] - A[i])
        return cls(traj.xi - xi_half, A, W, params, a_star, w_star)

    def envelopes(self, y) -> tuple[np.ndarray, np.ndarray]:
        """``(|A|, W0)`` at slow positions ``y``, clamped to the end states outside the samples."""
        y = np.asarray(y, dtype=float)
        if self.y_samples.size == 1:
            return np.full(y.shape, self.A_left), np.full(y.shape, self.W_left)
        a = PchipInterpolator(self.y_samples, self.A_abs, extrapolate=False)(y)
        w = PchipInterpolator(self.y_samples, self.W0, extrapolate=False)(y)
        left = y < self.y_samples[0]
        right = y > self.y_samples[-1]
        a[left], w[left] = self.A_left, self.W_left
        a[right], w[right] = self.A_right, self.W_right
        return a, w


def _wrap(d: np.ndarray, length: float) -> np.ndarray:
    return (d + 0.5 * length) % length - 0.5 * length


def assemble_front(
    traj: Trajectory | FrontProfile,
    params: ModelParams,
    t: float,
    grid: FieldPair,
    x_front: float | None = None,
    x_back: float | None = None,
) -> FieldPair:
    """Sample the leading-order front on ``grid`` at time ``t``.

    The interface (half pattern amplitude) sits at ``x_front + eps c0 t``.
    With ``x_back`` a mirrored interface bounds the pattern from the left, so
    the state is a pattern slab on ``[x_back, x_front]`` in a periodic box;
    each point uses the nearer interface.  Without it the pattern fills
    everything left of ``x_front`` (no wrap-around).
    """
    prof = traj if isinstance(traj, FrontProfile) else FrontProfile.from_trajectory(traj)
    eps = params.eps
    x = grid.x
    L = grid.length
    if x_front is None:
        x_front = L / 3.0
    shift = eps * params.c0 * t  # eps^2 c0 t in y is eps c0 t in x
    if x_back is None:
        y = eps * (x - x_front - shift)
    else:
        d_f = _wrap(x - x_front - shift, L)
        d_b = _wrap(x_back - shift - x, L)
        y = eps * np.where(np.abs(d_f) <= np.abs(d_b), d_f, d_b)
    a, w0 = prof.envelopes(y)
    phase = params.kc * (x + params.x0)
    g = params.gamma
    u = 2.0 * eps * a * np.cos(phase)
    v = eps**2 * (w0 - 2 * g * a**2 - 2 * g * a**2 * np.cos(2 * phase))
    out = FieldPair.from_physical(u, v, L, time=t)
    out.meta.update({"x_front": x_front, "x_back": x_back, "t": t})
    return out
