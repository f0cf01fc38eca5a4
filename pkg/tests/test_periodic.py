import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from patternfront.model import DomainError, ModelParams
from patternfront.periodic import (ConvergenceError, PeriodicEquilibrium, amplitude_fixed_point, embed,
                                   galerkin_residual, leading_order, newton_refine, shift, to_fields)

# calibration: max over gamma in {0, 1} of |2|u_1| - 2 eps a| / eps^2 at eps = 0.05 is 1.52e-3
C_AMPLITUDE = 2e-3


def P(eps=0.05, gamma=1.0, **kw):
    return ModelParams(alpha0=3.0, c0=7.0, gamma=gamma, eps=eps, **kw)


def test_leading_order_examples():
    lo = leading_order(P(0.1, 0.0))
    assert lo.u_amplitude == pytest.approx(0.2)
    assert np.all(lo.v_coeffs == 0)
    lo1 = leading_order(P(0.1, 1.0))
    # v = -0.015 cos 2x
    assert 2 * lo1.coeff("v", 2).real == pytest.approx(-0.015)
    nz_u = {n for n in lo1.modes if lo1.coeff("u", n) != 0}
    nz_v = {n for n in lo1.modes if lo1.coeff("v", n) != 0}
    assert nz_u == {-1, 1} and nz_v == {-2, 2}


def test_leading_order_domain():
    with pytest.raises(DomainError):
        leading_order(P(gamma=-3.0))
    with pytest.raises(DomainError):
        leading_order(P(q0=2.0))


def test_amplitude_fixed_point():
    assert amplitude_fixed_point(P(gamma=0.0)) == 1.0
    assert amplitude_fixed_point(P(gamma=1.0)) == pytest.approx(math.sqrt(0.75), abs=1e-15)
    assert amplitude_fixed_point(P(q0=math.sqrt(3.0))) == pytest.approx(0.0, abs=1e-7)
    with pytest.raises(DomainError):
        amplitude_fixed_point(P(gamma=-4.0))


@pytest.mark.parametrize("gamma", [0.0, 1.0])
def test_newton_converges(gamma):
    p = P(0.05, gamma)
    eq = newton_refine(leading_order(p, 16), tol=1e-12)
    assert eq.residual_norm <= 1e-12
    assert eq.coeff("v", 0) == 0
    lead = 2 * 0.05 * amplitude_fixed_point(p)
    assert abs(eq.u_amplitude - lead) <= C_AMPLITUDE * 0.05**2


def test_newton_eps_zero_gives_zero():
    eq = newton_refine(leading_order(P(0.0)))
    assert np.all(eq.u_coeffs == 0) and eq.residual_norm == 0.0


def test_newton_tolerance_floor():
    with pytest.raises(ValueError):
        newton_refine(leading_order(P()), tol=1e-15)


def test_newton_reports_stall():
    with pytest.raises(ConvergenceError):
        newton_refine(leading_order(P()), tol=1e-13, max_iter=0)


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_third_harmonic_hierarchy(eps):
    p = P(eps, 1.0)
    eq = newton_refine(leading_order(p))
    a = amplitude_fixed_point(p)
    # balance of the n = 3 equation at leading order: -64 u_3 = (1 + gamma) eps^3 a^3
    oracle = -(1 + p.gamma) * eps**3 * a**3 / 64
    assert eq.coeff("u", 3).real == pytest.approx(oracle, rel=5 * eps**2)


def test_galerkin_residual_oracle():
    # independent evaluation of the residual by direct convolution
    p = P(0.1, 0.5)
    lo = leading_order(p, 4)
    ru, rv = galerkin_residual(lo.u_coeffs, lo.v_coeffs, p)
    u = {n: lo.coeff("u", n) for n in range(-4, 5)}
    v = {n: lo.coeff("v", n) for n in range(-4, 5)}

    def conv(f, g):
        out = {}
        for i, fi in f.items():
            for j, gj in g.items():
                out[i + j] = out.get(i + j, 0) + fi * gj
        return out

    uv, uu = conv(u, v), conv(u, u)
    uuu = conv(uu, u)
    for n in range(-4, 5):
        lu = -(1 - n * n) ** 2 + p.alpha
        assert ru[n + 4] == pytest.approx(lu * u[n] + uv.get(n, 0) - uuu.get(n, 0), abs=1e-16)
        assert rv[n + 4] == pytest.approx(-n * n * (v[n] + p.gamma * uu.get(n, 0)), abs=1e-16)


def test_mean_of_v_is_zero():
    eq = newton_refine(leading_order(P()))
    x = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    assert abs(np.mean(eq.sample(x)[1])) <= 1e-14


def test_reflection_symmetry():
    eq = newton_refine(leading_order(P(0.1, 1.0)))
    scale = np.max(np.abs(eq.u_coeffs))
    assert np.max(np.abs(eq.u_coeffs.imag)) <= 1e-14 * scale
    assert np.max(np.abs(eq.v_coeffs.imag)) <= 1e-14 * scale
    assert np.allclose(eq.u_coeffs, eq.u_coeffs[::-1], rtol=0, atol=1e-16)


@given(st.floats(0.0, 2 * math.pi - 1e-9))
def test_translation_family(x0):
    p = P(0.05, 1.0)
    a = newton_refine(leading_order(p.replace(x0=x0)))
    b = shift(newton_refine(leading_order(p)), x0)
    x = np.linspace(0, 2 * np.pi, 97)
    ua, va = a.sample(x)
    ub, vb = b.sample(x)
    assert np.max(np.abs(ua - ub)) <= 1e-10
    assert np.max(np.abs(va - vb)) <= 1e-10


def test_convergence_in_truncation():
    p = P(0.05, 1.0)
    r = [embed(newton_refine(leading_order(p, n), tol=1e-13), 2 * n).residual_norm for n in (4, 8)]
    assert r[1] / r[0] <= 1e-3


def test_json_round_trip(tmp_path):
    eq = newton_refine(leading_order(P()))
    path = tmp_path / "eq.json"
    eq.dump_json(path)
    back = PeriodicEquilibrium.from_dict(json.loads(path.read_text()))
    assert np.array_equal(back.u_coeffs, eq.u_coeffs)
    assert np.array_equal(back.v_coeffs, eq.v_coeffs)
    assert back.params == eq.params


def test_to_fields_rejects_coarse_grid():
    with pytest.raises(ValueError):
        to_fields(leading_order(P()), 32, 2)


def test_to_fields_samples_equilibrium():
    eq = newton_refine(leading_order(P(0.1, 1.0)))
    f = to_fields(eq, 128, 2)
    u, v = eq.sample(f.x)
    assert np.max(np.abs(f.u - u)) <= 1e-15
    assert np.max(np.abs(f.v - v)) <= 1e-15
