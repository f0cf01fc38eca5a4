import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from patternfront.model import DomainError, ModelParams
from patternfront.periodic import amplitude_fixed_point
from patternfront.reduced import (ReducedState, Trajectory, fixed_points, jacobian, limiting_rhs,
                                  linearize, lyapunov_defect, lyapunov_H, reduced_rhs, rescale_to_limit,
                                  shoot_heteroclinic)


def P(gamma=0.0, c0=7.0, alpha0=3.0):
    return ModelParams(alpha0=alpha0, c0=c0, gamma=gamma, eps=0.1)


def as_array(s):
    return s.to_real()


def test_rhs_examples():
    assert np.all(as_array(reduced_rhs(ReducedState(0j, 0j, 0.0), P())) == 0)
    assert np.all(as_array(reduced_rhs(ReducedState(1 + 0j, 0j, 0.0), P())) == 0)
    d = reduced_rhs(ReducedState(1 + 0j, 0j, 1.5), P(1.0))
    assert d.W0 == pytest.approx(-7 * 1.5 + 14)
    d = reduced_rhs(ReducedState(complex(math.sqrt(0.75)), 0j, 1.5), P(1.0))
    # W0 equation cancels terms of size c0 W0
    assert np.max(np.abs(as_array(d))) <= 1e-15 * 7 * 1.5 * 2


def test_fixed_points():
    o, c = fixed_points(P(0.0))
    assert c.state == ReducedState(1 + 0j, 0j, 0.0)
    _, c1 = fixed_points(P(1.0))
    assert c1.state.A.real == pytest.approx(0.8660254037844386, abs=1e-15)
    assert c1.state.W0 == pytest.approx(1.5)
    with pytest.warns(UserWarning):
        pts = fixed_points(P(-3.5))
    assert [f.classification for f in pts] == ["trivial"]


@pytest.mark.parametrize("gamma", [-2.0, 0.0, 0.5, 1.0, 5.0])
def test_fixed_points_vanish(gamma):
    for f in fixed_points(P(gamma)):
        scale = 1 + 7 * abs(f.state.W0)
        assert np.max(np.abs(as_array(reduced_rhs(f.state, P(gamma))))) <= 4e-16 * scale


@pytest.mark.parametrize("gamma", [0.0, 1.0, 2.5])
def test_fixed_point_matches_periodic_amplitude(gamma):
    _, c = fixed_points(P(gamma))
    assert abs(c.state.A) == amplitude_fixed_point(P(gamma))


def test_jacobian_matches_finite_differences():
    p = P(0.7)
    s = ReducedState(0.4 - 0.3j, 0.2 + 0.1j, 0.3)
    J = jacobian(s, p)
    h = 1e-6
    y = s.to_real()
    for k in range(5):
        e = np.zeros(5)
        e[k] = h
        fd = (as_array(reduced_rhs(ReducedState.from_real(y + e), p))
              - as_array(reduced_rhs(ReducedState.from_real(y - e), p))) / (2 * h)
        assert np.allclose(J[:, k], fd, atol=1e-8)


def test_origin_spectrum():
    o = linearize(fixed_points(P(0.0))[0], P(0.0))
    assert np.allclose(np.sort(o.eigenvalues.real), [-7, -1, -1, -0.75, -0.75], atol=1e-10)
    assert np.all(o.eigenvalues.imag == 0)


@pytest.mark.parametrize("gamma", [0.0, 1.0])
def test_circle_signature(gamma):
    c = linearize(fixed_points(P(gamma))[1], P(gamma))
    assert c.signature == ("+", "0", "-", "-", "-")
    assert abs(c.eigenvalues[1]) <= 1e-12
    # the neutral direction is the rotation A -> e^{i theta} A
    v = np.real_if_close(c.eigenvectors[:, 1])
    assert abs(abs(v[1]) - 1) <= 1e-12


@given(st.floats(-5, 5), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
       st.floats(-2, 2), st.floats(0, 2 * math.pi))
def test_rotation_equivariance(g, ar, ai, br, bi, w, theta):
    p = P(g)
    s = ReducedState(complex(ar, ai), complex(br, bi), w)
    rot = cmath.exp(1j * theta)
    lhs = reduced_rhs(ReducedState(rot * s.A, rot * s.B, w), p)
    rhs = reduced_rhs(s, p)
    assert abs(lhs.A - rot * rhs.A) <= 1e-12
    assert abs(lhs.B - rot * rhs.B) <= 1e-12
    assert abs(lhs.W0 - rhs.W0) <= 1e-12


def test_lyapunov_values():
    assert lyapunov_H(0j, 0j, P()) == 0.0
    assert lyapunov_H(1 + 0j, 0j, P()) == pytest.approx(0.75)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_lyapunov_derivative_identity(ar, ai, br, bi):
    # chain rule on H along the vector field at gamma = 0, W0 = 0
    p = P(0.0)
    s = ReducedState(complex(ar, ai), complex(br, bi), 0.0)
    d = reduced_rhs(s, p)
    a2 = abs(s.A) ** 2
    dH = 4 * (s.B.conjugate() * d.B).real + (p.alpha0 - 3 * a2) * (s.A.conjugate() * d.A).real
    assert dH == pytest.approx(-p.c0 * abs(s.B) ** 2, abs=1e-12)


def test_limiting_system():
    p = P()
    assert np.all(as_array(limiting_rhs(ReducedState(1 + 0j, 0j, 1.0), p)) == 0)
    assert np.all(as_array(limiting_rhs(ReducedState(0j, 0j, 0.0), p)) == 0)
    for phi in (0.3, 2.0):
        s = ReducedState(cmath.exp(1j * phi), 0j, 1.0)
        assert np.max(np.abs(as_array(limiting_rhs(s, p)))) <= 1e-14


def test_limiting_system_is_rescaled_limit():
    g = 1e6
    p = P(g)
    rng = np.random.default_rng(3)
    for _ in range(5):
        s_lim = ReducedState(complex(*rng.uniform(-1, 1, 2)), complex(*rng.uniform(-1, 1, 2)), rng.uniform(0, 2))
        r = math.sqrt((3 + g) / p.alpha0)
        s = ReducedState(s_lim.A / r, s_lim.B / r, s_lim.W0 * 2 * p.alpha0 * g / (3 + g))
        assert rescale_to_limit(s, p).A == pytest.approx(s_lim.A)
        d = rescale_to_limit(reduced_rhs(s, p), p)
        ref = limiting_rhs(s_lim, p)
        scale = np.max(np.abs(as_array(ref)))
        assert np.max(np.abs(as_array(d) - as_array(ref))) <= 1e-4 * scale


@pytest.mark.parametrize("gamma", [0.0, 0.5])
def test_shooting_succeeds(gamma):
    res = shoot_heteroclinic(P(gamma), delta=1e-5)
    assert res.success, res.reason
    assert res.terminal_norm <= 1e-6 * (1 + 1e-12)
    A = np.hypot(res.trajectory.y[0], res.trajectory.y[1])
    assert np.all(np.diff(A) <= 0)
    assert np.all(res.trajectory.y[[1, 3]] == 0)


def test_shooting_refuses_oscillatory_regime():
    with pytest.raises(DomainError):
        shoot_heteroclinic(P(c0=4.0))
    with pytest.raises(ValueError):
        shoot_heteroclinic(P(), delta=0.1)


def test_shooting_robust_in_delta():
    ends = []
    for delta in (1e-4, 1e-5, 1e-6):
        res = shoot_heteroclinic(P(0.5), delta=delta)
        assert res.success
        ends.append(res.trajectory.y[:, -1])
    # terminal events fire at the same norm, so the endpoints are already aligned in time
    for e in ends[1:]:
        assert np.max(np.abs(e - ends[0])) <= 1e-5


def test_real_slice_invariance():
    res = shoot_heteroclinic(P(1.0))
    assert np.max(np.abs(res.trajectory.y[[1, 3]])) == 0.0


def test_lyapunov_decay_along_orbit():
    res = shoot_heteroclinic(P(0.0), rtol=1e-12, atol=1e-12)
    assert np.max(np.abs(res.trajectory.y[4])) == 0.0
    H = res.trajectory.H()
    assert np.all(np.diff(H) <= 1e-12)
    assert np.max(np.abs(lyapunov_defect(res.trajectory))) <= 1e-7


def test_constant_trajectory():
    s = ReducedState(1 + 0j, 0j, 0.0)
    t = Trajectory.constant(s, P())
    assert t.evaluate(np.array([-5.0, 3.0])).shape == (5, 2)
    assert np.all(t.evaluate(2.0)[:, ] == s.to_real())
