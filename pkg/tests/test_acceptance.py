"""Acceptance criteria, one test per criterion, each recording a PASS/FAIL line."""

import time

import numpy as np
import pytest

from patternfront.model import FieldPair, ModelParams, make_grid
from patternfront.pde import SCHEMES, SimConfig, ansatz_residual, run_front_experiment, simulate
from patternfront.periodic import amplitude_fixed_point, leading_order, newton_refine, to_fields
from patternfront.reduced import fixed_points, linearize, lyapunov_defect, reduced_rhs, shoot_heteroclinic
from patternfront.spectrum import adjoint_pairing, align_branches, classify_central, compute_spectrum

pytestmark = pytest.mark.acceptance

# frozen from a calibration run: max over gamma in {0, 1} of the deviation / eps^2 is 1.52e-3
C_AMPLITUDE = 2e-3


def P(eps=0.1, gamma=0.0, **kw):
    return ModelParams(alpha0=3.0, c0=7.0, gamma=gamma, eps=eps, **kw)


def _slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def test_criterion_1_eigenvalue_expansions(criterion):
    t0 = time.perf_counter()
    eps_list = np.array([1e-2, 1e-3, 1e-4])
    central, other = [], []
    for eps in eps_list:
        c_err = o_err = 0.0
        for sl in compute_spectrum(16, P(eps)):
            for ex, asym in ((sl.exact_sh, sl.asym_sh), (sl.exact_con, sl.asym_con)):
                asym = align_branches(ex, asym)
                small = np.abs(ex) < 10 * eps
                err = np.abs(ex - asym)
                c_err = max(c_err, err[small].max(initial=0.0))
                o_err = max(o_err, err[~small].max(initial=0.0))
        central.append(c_err)
        other.append(o_err)
    s_c, s_o = _slope(eps_list, central), _slope(eps_list, other)
    ok = s_c >= 1.8 and s_o >= 0.9
    assert criterion(1, ok, f"central slope {s_c:.3f} >= 1.8, eps^1/2 slope {s_o:.3f} >= 0.9",
                     time.perf_counter() - t0, 5)


def test_criterion_2_spectral_gap(criterion):
    t0 = time.perf_counter()
    eps = 1e-2
    rep = classify_central(compute_spectrum(16, P(eps), asymptotic=False), eps)
    ok = rep.n_central == 6 and rep.ratio <= 10 * eps**0.5
    assert criterion(2, ok, f"{rep.n_central} central, ratio {rep.ratio:.4f} <= {10 * eps**0.5:g}",
                     time.perf_counter() - t0, 5)


def test_criterion_3_adjoint_pairing(criterion):
    t0 = time.perf_counter()
    worst_lead, worst_dp = 0.0, 0.0
    parts = []
    for eps in (1e-2, 1e-3):
        for sign in (1, -1):
            pr = adjoint_pairing(sign, P(eps))
            lead = abs(pr.pairing - (-sign * eps * 1.0)) / (10 * eps**2)
            worst_lead = max(worst_lead, lead)
            worst_dp = max(worst_dp, abs(pr.pairing + pr.char_poly_derivative))
            parts.append(f"{abs(pr.pairing + sign * eps) / eps**2:.2f}")
    ok = worst_lead <= 1 and worst_dp <= 1e-8
    detail = (f"|pairing -+ eps Delta| / eps^2 = {', '.join(parts)} (bound 10); "
              f"|pairing + p'| = {worst_dp:.1e} <= 1e-8")
    assert criterion(3, ok, detail, time.perf_counter() - t0, 1)


def test_criterion_4_periodic_equilibria(criterion):
    t0 = time.perf_counter()
    eps = 0.05
    res, dev, mean_v = [], [], []
    for gamma in (0.0, 1.0):
        p = P(eps, gamma)
        eq = newton_refine(leading_order(p), tol=1e-12)
        res.append(eq.residual_norm)
        dev.append(abs(eq.u_amplitude - 2 * eps * amplitude_fixed_point(p)) / eps**2)
        x = np.linspace(0, 2 * np.pi, 256, endpoint=False)
        mean_v.append(abs(np.mean(eq.sample(x)[1])))
    ok = max(res) <= 1e-11 and max(dev) <= C_AMPLITUDE and max(mean_v) <= 1e-14
    detail = (f"residual {max(res):.1e} <= 1e-11, deviation/eps^2 {max(dev):.2e} <= C = {C_AMPLITUDE:g}, "
              f"mean v {max(mean_v):.1e}")
    assert criterion(4, ok, detail, time.perf_counter() - t0, 5)


def test_criterion_5_reduced_fixed_points(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for gamma in (0.0, 0.5, 1.0, 2.0, 5.0):
        for f in fixed_points(P(gamma=gamma)):
            worst = max(worst, float(np.max(np.abs(reduced_rhs(f.state, P(gamma=gamma)).to_real()))))
    p = P()
    origin, circle = (linearize(f, p) for f in fixed_points(p))
    origin_err = float(np.max(np.abs(np.sort(origin.eigenvalues.real) - [-7, -1, -1, -0.75, -0.75])))
    origin_real = bool(np.all(origin.eigenvalues.imag == 0))
    ok = worst <= 1e-14 and circle.signature == ("+", "0", "-", "-", "-") and origin_err <= 1e-10 and origin_real
    detail = (f"fixed-point residual {worst:.1e}, circle {''.join(circle.signature)}, "
              f"origin spectrum error {origin_err:.1e}")
    assert criterion(5, ok, detail, time.perf_counter() - t0, 1)


def test_criterion_6_heteroclinic_shooting(criterion):
    t0 = time.perf_counter()
    norms = []
    for gamma in (0.0, 0.5, 1.0, 2.0, 5.0):
        shot = shoot_heteroclinic(P(gamma=gamma))
        norms.append(shot.terminal_norm if shot.success else np.inf)
    # tight integration so the identity is limited by the orbit, not by the integrator
    traj = shoot_heteroclinic(P(), rtol=1e-12, atol=1e-12).trajectory
    lyap = float(np.max(np.abs(lyapunov_defect(traj))))
    w0 = float(np.max(np.abs(traj.y[4])))
    ok = max(norms) <= 1e-6 * (1 + 1e-9) and lyap <= 1e-7 and w0 <= 1e-12
    detail = f"terminal norm {max(norms):.2e} <= 1e-6, Lyapunov defect {lyap:.1e} <= 1e-7, |W0| {w0:.1e}"
    assert criterion(6, ok, detail, time.perf_counter() - t0, 10)


def test_criterion_7_conservation(criterion):
    t0 = time.perf_counter()
    p = P(gamma=1.0)
    eq = newton_refine(leading_order(p, 8))
    f = to_fields(eq, 1024, 32)
    rng = np.random.default_rng(1)
    f = FieldPair.from_physical(f.u + 1e-3 * rng.standard_normal(1024), f.v, f.length)
    _, diag = simulate(f, p, SimConfig(dt=0.01, t_end=100.0, record_every=100))
    drift = float(np.max(np.abs(np.asarray(diag.mean_v) - diag.mean_v[0])))
    ok = drift <= 1e-10 and len(diag.times) == 101
    assert criterion(7, ok, f"10^4 steps, mean(v) drift {drift:.1e} <= 1e-10", time.perf_counter() - t0, 60)


def test_criterion_8_stationarity(criterion):
    t0 = time.perf_counter()
    p = P(0.1, 1.0)
    eq = newton_refine(leading_order(p))
    f = to_fields(eq, 64, 1)
    moves = {}
    for scheme in SCHEMES:
        fin, _ = simulate(f, p, SimConfig(dt=0.01, t_end=100.0, scheme=scheme, record_every=10**6))
        moves[scheme] = float(np.max(np.abs(fin.u - f.u)) + np.max(np.abs(fin.v - f.v)))
    ok = max(moves.values()) <= 1e-8
    detail = ", ".join(f"{k} {v:.1e}" for k, v in moves.items()) + " <= 1e-8"
    assert criterion(8, ok, detail, time.perf_counter() - t0, 60)


def test_criterion_9_front_invasion(criterion):
    t0 = time.perf_counter()
    p = P(0.1, 0.0)
    grid = make_grid(4096, 128, p)
    diag = run_front_experiment(p, SimConfig(dt=0.05, t_end=150.0, record_every=40), grid)
    speed_err = abs(diag.speed - 0.7) / 0.7
    amp_err = abs(diag.pattern_amplitude - diag.reference_amplitude) / diag.reference_amplitude
    ok = speed_err <= 0.15 and amp_err <= 0.05 and diag.conservation_drift <= 1e-10
    detail = (f"speed {diag.speed:.5f} vs 0.7 ({100 * speed_err:.2f}% <= 15%), "
              f"amplitude {diag.pattern_amplitude:.6f} vs {diag.reference_amplitude:.6f} ({100 * amp_err:.3f}% <= 5%)")
    assert criterion(9, ok, detail, time.perf_counter() - t0, 300)


def test_criterion_10_ansatz_residual(criterion):
    t0 = time.perf_counter()
    p = P(0.1, 0.0)
    rep = ansatz_residual(p, [0.1, 0.05, 0.025])
    ok = rep.slope_u >= 2
    detail = f"u-residual slope {rep.slope_u:.3f} >= 2 ({', '.join(f'{r:.2e}' for r in rep.res_u)})"
    assert criterion(10, ok, detail, time.perf_counter() - t0, 120)
