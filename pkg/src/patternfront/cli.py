"""Command-line front end.

Exit codes: 0 success, 2 precondition or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .front import assemble_front
from .io import RunManifest, columns_to_rows, write_csv, write_json
from .model import ConfigError, DomainError, FieldPair, ModelParams, load_config, make_grid
from .pde import BlowUpError, SimConfig, run_front_experiment, simulate
from .periodic import ConvergenceError, SingularJacobianError, leading_order, newton_refine
from .reduced import fixed_points, linearize, lyapunov_H, shoot_heteroclinic
from .spectrum import (ClassificationError, SpectrumError, classify_central, compute_spectrum,
                       extended_model_spectrum, spectrum_rows)

log = logging.getLogger("patternfront")

DEFAULT_PARAMS = ModelParams(alpha0=3.0, c0=7.0, gamma=0.0, eps=0.1)

EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3


class NumericalFailure(RuntimeError):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _tag(x: float) -> str:
    return ("%g" % x).replace("-", "m")


class Context:
    def __init__(self, args: argparse.Namespace, params: ModelParams, out: Path):
        self.args, self.params, self.out = args, params, out
        self.threads = max(1, args.threads)

    def manifest(self, sub: str, options: dict) -> RunManifest:
        return RunManifest(sub, self.params.as_dict(), options, __version__)

    def map(self, fn: Callable, items: Sequence):
        if self.threads == 1 or len(items) < 2:
            return [fn(i) for i in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))


def cmd_spectrum(ctx: Context) -> int:
    a = ctx.args
    eps_list = a.eps
    man = ctx.manifest("spectrum", {"n_max": a.n_max, "eps": eps_list, "extended": a.extended,
                                    "cu": a.cu, "cv": a.cv, "c": a.c, "ext_eps": a.ext_eps})
    summary, failed = {}, []
    for eps in eps_list:
        p = ctx.params.replace(eps=eps)
        slices = compute_spectrum(a.n_max, p)
        entry = {"eps": eps}
        if eps > 0:
            try:
                rep = classify_central(slices)
            except ClassificationError as exc:
                failed.append(eps)
                entry.update(n_central=len(exc.offending), error=str(exc),
                             offending=[{"n": n, "block": b, "lam": lam} for n, b, lam in exc.offending])
            else:
                entry.update(n_central=rep.n_central, max_central_re=rep.max_central_re,
                             min_hyperbolic_re=rep.min_hyperbolic_re, ratio=rep.ratio,
                             threshold=rep.threshold, k_hyperbolic=rep.k_hyperbolic)
        else:
            re = max(float(np.max(np.abs(sl.exact.real))) for sl in slices)
            entry.update(n_central=None, all_imaginary=bool(re <= 1e-12), max_abs_re=re)
        summary[_tag(eps)] = entry
        man.outputs.append(write_csv(ctx.out / f"spectrum_eps{_tag(eps)}.csv", spectrum_rows(slices), man.digest))
    if a.extended:
        rows, gap = [], math.inf
        p_ext = ctx.params.replace(eps=a.ext_eps)
        for n in range(-a.n_max, a.n_max + 1):
            sh, con = extended_model_spectrum(n, p_ext, a.cu, a.cv, a.c)
            for block, vals in (("sh", sh), ("con", con)):
                for j, lam in enumerate(vals):
                    central = abs(lam.real) <= 1e-8
                    if not central:
                        gap = min(gap, abs(lam.real))
                    rows.append({"n": n, "block": block, "branch": j, "re_exact": lam.real,
                                 "im_exact": lam.imag, "central": int(central)})
        man.outputs.append(write_csv(ctx.out / "spectrum_extended.csv", rows, man.digest))
        man.outputs.append(write_json(ctx.out / "gap_extended.json",
                                      {"digest": man.digest, "min_noncentral_re": gap,
                                       "n_central": sum(r["central"] for r in rows)}))
    man.outputs.append(write_json(ctx.out / "gap_summary.json", {"digest": man.digest, "eps": summary}))
    man.write(ctx.out)
    for k, v in summary.items():
        print(f"eps={k}: central={v.get('n_central')}")
    if failed:
        raise NumericalFailure(f"central/hyperbolic split failed for eps in {failed}")
    return EXIT_OK


def cmd_periodic(ctx: Context) -> int:
    a = ctx.args
    man = ctx.manifest("periodic", {"n_modes": a.n_modes, "tol": a.tol})
    eq = newton_refine(leading_order(ctx.params, a.n_modes), a.tol)
    d = eq.to_dict()
    d["digest"] = man.digest
    d["u_amplitude"] = eq.u_amplitude
    man.outputs.append(write_json(ctx.out / "periodic.json", d))
    x = np.linspace(0.0, 2 * np.pi / ctx.params.kc, a.samples, endpoint=False)
    u, v = eq.sample(x)
    man.outputs.append(write_csv(ctx.out / "periodic.csv", columns_to_rows({"x": x, "u": u, "v": v}), man.digest))
    man.write(ctx.out)
    print(f"residual={eq.residual_norm:.3e} amplitude={eq.u_amplitude:.12g}")
    return EXIT_OK


def _trajectory_rows(traj, params) -> list[dict]:
    y = traj.y
    H = [lyapunov_H(complex(y[0, i], y[1, i]), complex(y[2, i], y[3, i]), params) for i in range(y.shape[1])]
    return columns_to_rows({"xi": traj.xi, "re_A": y[0], "im_A": y[1], "re_B": y[2], "im_B": y[3],
                            "W0": y[4], "H": H})


def _shoot_all(ctx: Context, gammas: list[float]):
    def one(g):
        return g, shoot_heteroclinic(ctx.params.replace(gamma=g), delta=ctx.args.delta)

    return ctx.map(one, gammas)


def cmd_reduced(ctx: Context) -> int:
    a = ctx.args
    gammas = a.gamma if a.gamma is not None else [ctx.params.gamma]
    man = ctx.manifest("reduced", {"gamma": gammas, "delta": a.delta})
    fp = {}
    for g in gammas:
        p = ctx.params.replace(gamma=g)
        pts = [linearize(f, p) for f in fixed_points(p)]
        fp[_tag(g)] = [{"kind": f.classification, "state": f.state.to_real(), "eigenvalues": f.eigenvalues,
                        "signature": "".join(f.signature)} for f in pts]
    failures = []
    for g, res in _shoot_all(ctx, gammas):
        man.outputs.append(write_csv(ctx.out / f"reduced_gamma{_tag(g)}.csv",
                                     _trajectory_rows(res.trajectory, ctx.params.replace(gamma=g)), man.digest))
        fp[_tag(g)].append({"shooting": res.reason, "terminal_norm": res.terminal_norm, "xi_end": res.xi_end})
        print(f"gamma={g}: {res.reason} (terminal norm {res.terminal_norm:.2e})")
        if not res.success:
            failures.append(g)
    man.outputs.append(write_json(ctx.out / "fixed_points.json", {"digest": man.digest, "gamma": fp}))
    man.write(ctx.out)
    if failures:
        raise NumericalFailure(f"shooting failed for gamma in {failures}")
    return EXIT_OK


def _require_front(params: ModelParams) -> None:
    if params.c0**2 <= 16 * params.alpha0:
        raise DomainError(f"front pipeline needs c0^2 > 16 alpha0 (got {params.c0**2:g} <= {16 * params.alpha0:g})")


def cmd_front(ctx: Context) -> int:
    a = ctx.args
    _require_front(ctx.params)
    gammas = a.gamma if a.gamma is not None else [ctx.params.gamma]
    opts = {"gamma": gammas, "delta": a.delta, "simulate": a.simulate, "n_grid": a.n_grid,
            "n_periods": a.n_periods, "dt": a.dt, "t_end": a.t_end}
    man = ctx.manifest("front", opts)
    failures = []
    for g, res in _shoot_all(ctx, gammas):
        p = ctx.params.replace(gamma=g)
        tag = _tag(g)
        man.outputs.append(write_csv(ctx.out / f"trajectory_gamma{tag}.csv", _trajectory_rows(res.trajectory, p),
                                     man.digest))
        if not res.success:
            failures.append(g)
            print(f"gamma={g}: shooting failed ({res.reason})")
            continue
        grid = make_grid(a.n_grid, a.n_periods, p)
        f = assemble_front(res.trajectory, p, 0.0, grid, x_front=grid.length / 3, x_back=0.0)
        man.outputs.append(write_csv(ctx.out / f"front_gamma{tag}.csv",
                                     columns_to_rows({"x": grid.x, "u": f.u, "v": f.v}), man.digest))
        if a.simulate:
            cfg = SimConfig(dt=a.dt, t_end=a.t_end, record_every=max(1, int(round(1.0 / a.dt))))
            d = run_front_experiment(p, cfg, grid, traj=res.trajectory)
            man.outputs.append(write_csv(ctx.out / f"diagnostics_gamma{tag}.csv", d.rows(), man.digest))
            man.outputs.append(write_json(ctx.out / f"front_summary_gamma{tag}.json", {
                "digest": man.digest, "speed": d.speed, "expected_speed": p.eps * p.c0,
                "pattern_amplitude": d.pattern_amplitude, "reference_amplitude": d.reference_amplitude,
                "conservation_drift": d.conservation_drift}))
            print(f"gamma={g}: speed={d.speed:.6g} (eps*c0={p.eps * p.c0:g})")
        else:
            print(f"gamma={g}: front assembled")
    man.write(ctx.out)
    if failures:
        raise NumericalFailure(f"shooting failed for gamma in {failures}")
    return EXIT_OK


def _fields_to_rows(f: FieldPair) -> list[dict]:
    return columns_to_rows({"x": f.x, "u": f.u, "v": f.v})


def cmd_simulate(ctx: Context) -> int:
    a = ctx.args
    p = ctx.params
    opts = {"init": a.init, "n_grid": a.n_grid, "n_periods": a.n_periods, "dt": a.dt, "t_end": a.t_end,
            "scheme": a.scheme, "noise": a.noise, "seed": ctx.args.seed if a.noise > 0 else None}
    man = ctx.manifest("simulate", opts)
    grid = make_grid(a.n_grid, a.n_periods, p)
    if a.init == "periodic":
        eq = newton_refine(leading_order(p))
        u, v = eq.sample(grid.x)
    elif a.init == "front":
        _require_front(p)
        res = shoot_heteroclinic(p)
        if not res.success:
            raise NumericalFailure(f"shooting failed: {res.reason}")
        f = assemble_front(res.trajectory, p, 0.0, grid, x_front=grid.length / 3, x_back=0.0)
        u, v = f.u, f.v
    else:
        u, v = np.zeros(a.n_grid), np.zeros(a.n_grid)
    if a.noise > 0:
        rng = np.random.default_rng(a.seed)
        u = u + a.noise * rng.standard_normal(u.size)
    fields = FieldPair.from_physical(u, v, grid.length)
    cfg = SimConfig(dt=a.dt, t_end=a.t_end, scheme=a.scheme, record_every=a.record_every)
    final, diag = simulate(fields, p, cfg)
    man.outputs.append(write_csv(ctx.out / "simulate_diagnostics.csv", diag.rows(), man.digest))
    man.outputs.append(write_csv(ctx.out / "simulate_final.csv", _fields_to_rows(final), man.digest))
    man.outputs.append(write_json(ctx.out / "simulate_final.json", {
        "digest": man.digest, "n_grid": final.n_grid, "length": final.length, "time": final.time,
        "params": p.as_dict(), "conservation_drift": diag.conservation_drift}))
    man.write(ctx.out)
    print(f"t={final.time:g} drift={diag.conservation_drift:.3e}")
    return EXIT_OK


def cmd_validate(ctx: Context) -> int:
    """Fast consistency checks on the configured parameters (no long simulations)."""
    from .spectrum import adjoint_pairing

    p = ctx.params
    man = ctx.manifest("validate", {})
    checks = {}
    # the central/hyperbolic split is asymptotic; check it inside its regime
    p_gap = p.replace(eps=min(p.eps, 1e-2)) if p.eps > 0 else p.replace(eps=1e-2)
    slices = compute_spectrum(30, p_gap)
    rep = classify_central(slices)
    checks["six_central"] = rep.n_central == 6
    for sign in (1, -1):
        pr = adjoint_pairing(sign, p_gap)
        checks[f"pairing_vs_dp_{'+' if sign > 0 else '-'}"] = abs(pr.pairing + pr.char_poly_derivative) <= 1e-8
    eq = newton_refine(leading_order(p))
    checks["periodic_residual"] = eq.residual_norm <= 1e-11
    checks["periodic_mean_v"] = abs(eq.coeff("v", 0)) <= 1e-14
    res = shoot_heteroclinic(p)
    checks["heteroclinic"] = res.success
    for k, v in checks.items():
        print(f"{'PASS' if v else 'FAIL'} {k}")
    man.outputs.append(write_json(ctx.out / "validate.json", {"digest": man.digest, "checks": checks}))
    man.write(ctx.out)
    if not all(checks.values()):
        raise NumericalFailure("validation checks failed")
    return EXIT_OK


def _global_flags(ap: argparse.ArgumentParser, suppress: bool) -> None:
    def d(value):
        return argparse.SUPPRESS if suppress else value

    ap.add_argument("--config", type=Path, default=d(None),
                    help="flat TOML table with alpha0, c0, gamma, eps [, q0, x0]")
    ap.add_argument("--out", type=Path, default=d(Path("out")),
                    help="output directory (env PATTERNFRONT_OUT wins)")
    ap.add_argument("--threads", type=int, default=d(1), help="workers for parameter sweeps")
    ap.add_argument("--seed", type=int, default=d(0), help="seed for optional random perturbations")
    ap.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="patternfront", description=__doc__.splitlines()[0])
    _global_flags(ap, suppress=False)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="spatial-dynamics spectra and gap summary")
    s.add_argument("--n-max", type=int, default=30)
    s.add_argument("--eps", type=_float_list, default=[0.01],
                   help="comma-separated eps values (default 0.01; the gap is asymptotic in eps)")
    s.add_argument("--extended", action="store_true", help="also the dispersive extension")
    s.add_argument("--cu", type=float, default=1.0)
    s.add_argument("--cv", type=float, default=1.0)
    s.add_argument("--c", type=float, default=3.0)
    s.add_argument("--ext-eps", type=float, default=0.0, help="eps used for the extended spectrum")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("periodic", parents=[common], help="refined periodic equilibrium")
    s.add_argument("--n-modes", type=int, default=16)
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--samples", type=int, default=256)
    s.set_defaults(func=cmd_periodic)

    for name, func, hlp in (("reduced", cmd_reduced, "fixed points and heteroclinic shooting"),
                            ("front", cmd_front, "front reconstruction (optionally simulated)")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--gamma", type=_float_list, help="comma-separated gamma sweep")
        s.add_argument("--delta", type=float, default=1e-5)
        if name == "front":
            s.add_argument("--simulate", action="store_true")
            s.add_argument("--n-grid", type=int, default=4096)
            s.add_argument("--n-periods", type=int, default=128)
            s.add_argument("--dt", type=float, default=0.05)
            s.add_argument("--t-end", type=float, default=150.0)
        s.set_defaults(func=func)

    s = sub.add_parser("simulate", parents=[common], help="time-step the full system")
    s.add_argument("--init", choices=("periodic", "front", "zero"), default="periodic")
    s.add_argument("--n-grid", type=int, default=256)
    s.add_argument("--n-periods", type=int, default=4)
    s.add_argument("--dt", type=float, default=0.05)
    s.add_argument("--t-end", type=float, default=10.0)
    s.add_argument("--scheme", choices=("IMEX-1", "IMEX-2", "ETD-RK"), default="IMEX-2")
    s.add_argument("--record-every", type=int, default=10)
    s.add_argument("--noise", type=float, default=0.0, help="seeded Gaussian perturbation of u")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("validate", parents=[common], help="fast consistency checks")
    s.set_defaults(func=cmd_validate)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        params = load_config(args.config) if args.config else DEFAULT_PARAMS
        out = Path(os.environ.get("PATTERNFRONT_OUT") or args.out)
        out.mkdir(parents=True, exist_ok=True)
        return args.func(Context(args, params, out))
    except (ConfigError, DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (NumericalFailure, SpectrumError, ClassificationError, ConvergenceError,
            SingularJacobianError, BlowUpError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
