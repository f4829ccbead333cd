"""Command-line interface.

Subcommands:

simulate          one scenario from flags and/or a key=value config file
figure NAME       run a figure preset batch (fig2..fig7)
sweep             velocity / bandwidth / detuning grid
validate          parameter, feasibility, and kernel self-checks
compare-backends  residue vs quadrature kernels, history vs aux solvers

Report paths write CSV + gnuplot script + manifest, and render PNG
figures alongside unless --no-figures is given.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .harness import (
    InitialState,
    Observable,
    Scenario,
    figure_preset,
    read_config,
    run_scenario,
    sweep_param,
)
from .harness import write_outputs as write_output_files
from .kernel import residue_kernel
from .model import (
    SystemParams,
    check_feasibility,
    coupling_regime,
    desk_scale_geometry,
    map_velocity,
    params_from_mapping,
    validate_params,
)
from .quadrature import QuadratureConfig, quadrature_kernel
from .volterra import make_grid, solve_aux, solve_history


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lambda_over_gamma", type=float, default=None,
                   help="cavity spectral width lambda/gamma")
    p.add_argument("--delta", dest="delta_over_gamma", type=float, default=None,
                   help="detuning Delta/gamma")
    p.add_argument("--beta-omega0", dest="beta_omega0_over_gamma", type=float, default=None,
                   help="velocity parameter beta*omega0/gamma")
    p.add_argument("--omega0", dest="omega0_over_gamma", type=float, default=None,
                   help="carrier ratio omega0/gamma")
    p.add_argument("--t-max", dest="t_max_gamma", type=float, default=None,
                   help="horizon in gamma*t")
    p.add_argument("--dt", dest="dt_gamma", type=float, default=None,
                   help="solver step in gamma*t (overrides the refinement policy)")
    p.add_argument("--config", type=Path, default=None,
                   help="key=value parameter file; flags override it")


def _params_from_args(args) -> tuple[SystemParams, float | None]:
    params = SystemParams()
    if args.config is not None:
        params = params_from_mapping(read_config(args.config))
    overrides = {}
    for name in ("lambda_over_gamma", "delta_over_gamma", "beta_omega0_over_gamma",
                 "omega0_over_gamma", "t_max_gamma"):
        val = getattr(args, name)
        if val is not None:
            overrides[name] = val
    dt_override = args.dt_gamma
    if dt_override is not None:
        overrides["dt_gamma"] = dt_override
    if overrides:
        params = replace(params, **overrides)
    return validate_params(params), dt_override


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", choices=("residue", "quadrature"), default="residue")
    p.add_argument("--solver", choices=("history", "aux"), default=None,
                   help="default: aux for residue, history for quadrature")
    p.add_argument("--initial", choices=("bell-psi",), default="bell-psi")
    p.add_argument("--out", type=Path, default=Path("runs"))
    p.add_argument("--no-figures", action="store_true",
                   help="skip matplotlib rendering, keep CSV/gnuplot/manifest")
    p.add_argument("--stride", type=int, default=None,
                   help="CSV row stride (default keeps files under 10k rows; 1 = full)")


def _add_quadrature_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--quad-window", type=float, default=50.0,
                   help="integration half-width around the line center, in lambdas")
    p.add_argument("--quad-rel-tol", type=float, default=1e-6)
    p.add_argument("--quad-boundary-term", dest="quad_boundary",
                   action="store_true", default=True,
                   help="keep the t+t' boundary branch (direct kernel evaluation only)")
    p.add_argument("--no-quad-boundary-term", dest="quad_boundary", action="store_false")
    p.add_argument("--quad-truncate-at-zero", dest="quad_truncate",
                   action="store_true", default=True)
    p.add_argument("--no-quad-truncate-at-zero", dest="quad_truncate", action="store_false")


def _quad_config(args) -> QuadratureConfig:
    return QuadratureConfig(
        window_halfwidth_lambdas=args.quad_window,
        rel_tol=args.quad_rel_tol,
        include_boundary_term=args.quad_boundary,
        truncate_at_zero=args.quad_truncate,
    )


def _solver_for(args) -> str:
    if args.solver is not None:
        return args.solver
    return "history" if args.kernel == "quadrature" else "aux"


def _cmd_simulate(args) -> int:
    params, dt_override = _params_from_args(args)
    scenario = Scenario(params=params, kernel_backend=args.kernel,
                        solver=_solver_for(args), initial=InitialState(kind=args.initial),
                        quadrature=_quad_config(args) if args.kernel == "quadrature" else None,
                        dt_override=dt_override, label="simulate")
    result = run_scenario(scenario)
    prefix = args.out / "simulate"
    paths = write_output_files(result, prefix, stride=args.stride)
    if not args.no_figures:
        from .plotting import render_scenarios
        paths.append(render_scenarios([result], args.out / "simulate_concurrence.png",
                                      quantity="concurrence"))
        paths.append(render_scenarios([result], args.out / "simulate_rates.png",
                                      quantity="rates"))
    for path in paths:
        print(path)
    return 0


_FIG5_PANELS = ((0.0, 0.01), (0.1, 1.0), (10.0, 20.0), (30.0, 40.0))


def _cmd_figure(args) -> int:
    scenarios = figure_preset(args.name, full_range=args.full_range)
    if args.kernel != "residue" or args.solver is not None or args.dt_gamma is not None:
        scenarios = [replace(s, kernel_backend=args.kernel, solver=_solver_for(args),
                             dt_override=args.dt_gamma) for s in scenarios]
    results = [run_scenario(s) for s in scenarios]
    prefix = args.out / args.name
    paths = write_output_files(results, prefix, stride=args.stride)
    if not args.no_figures:
        from .plotting import render_scenarios
        png = args.out / f"{args.name}.png"
        if args.name == "fig4":
            from .plotting import render_sweep
            from .harness import SweepResult
            obs = Observable(kind="at_time", time_gamma=100.0)
            sweep = SweepResult(
                axis="velocity",
                axis_values=tuple(s.params.beta_omega0_over_gamma for s in scenarios),
                values=tuple(obs.extract(r) for r in results),
                errors=(None,) * len(results), observable=obs,
                kernel_backend="residue", solver="aux",
                dt_values=tuple(r.dt_effective for r in results))
            paths.append(render_sweep(sweep, png, title="long-time concurrence vs velocity"))
        elif args.name == "fig5":
            def panel(r):
                v = r.scenario.params.beta_omega0_over_gamma
                return next(i for i, grp in enumerate(_FIG5_PANELS) if v in grp)
            paths.append(render_scenarios(results, png, quantity="rates", group_by=panel))
        elif args.name == "fig6":
            paths.append(render_scenarios(results, png, group_by="beta_omega0"))
        elif args.name == "fig7":
            paths.append(render_scenarios(results, png, group_by="beta_omega0"))
        else:
            paths.append(render_scenarios(results, png))
    for path in paths:
        print(path)
    return 0


def _cmd_sweep(args) -> int:
    params, dt_override = _params_from_args(args)
    values = [float(v) for v in args.values.split(",")]
    obs = (Observable(kind="time_average") if args.time_average
           else Observable(kind="at_time", time_gamma=args.at_time))
    sweep = sweep_param(args.axis, values, params, obs,
                        kernel_backend=args.kernel, solver=_solver_for(args),
                        dt_override=dt_override, max_workers=args.workers)
    prefix = args.out / f"sweep_{args.axis}"
    paths = write_output_files(sweep, prefix)
    if not args.no_figures:
        from .plotting import render_sweep
        paths.append(render_sweep(sweep, args.out / f"sweep_{args.axis}.png"))
    failures = [e for e in sweep.errors if e]
    for path in paths:
        print(path)
    for v, err in zip(sweep.axis_values, sweep.errors):
        if err:
            print(f"FAILED {args.axis}={v}: {err}", file=sys.stderr)
    return 1 if failures else 0


def _cmd_validate(args) -> int:
    params, _ = _params_from_args(args)
    print(f"parameters OK: lambda={params.lambda_over_gamma}g delta={params.delta_over_gamma}g "
          f"beta_omega0={params.beta_omega0_over_gamma}g omega0={params.omega0_over_gamma}g "
          f"t_max={params.t_max_gamma} dt={params.dt_gamma}")
    regime = coupling_regime(params.lambda_over_gamma)
    print(f"coupling regime: {regime.value}")
    geom = desk_scale_geometry(params)
    print(f"geometry: n={geom.n_mode} tau_gamma={geom.tau_gamma:.9g} "
          f"(omega1*tau = n*pi holds by construction)")
    rep = check_feasibility(params.beta_omega0_over_gamma)
    print(f"velocity: {rep.velocity_mps:g} m/s "
          f"(maps 0.2 m/s per unit of beta*omega0/gamma; "
          f"{map_velocity(1.0):g} m/s at 1)")
    warned = False
    if not rep.recoil_ok:
        print(f"WARNING: recoil bound violated (v = {rep.velocity_mps:g} m/s <= 1e-7 m/s)")
        warned = True
    if not rep.classical_ok:
        print(f"WARNING: classical-motion bound violated (de Broglie ratio {rep.de_broglie_ratio:g})")
        warned = True
    kern = residue_kernel(params)
    total = kern.total_weight
    expected = params.lambda_over_gamma / 4.0
    ok = abs(total - expected) <= 1e-15 + 1e-12 * expected
    print(f"kernel self-check: weights sum {total} vs lambda/4 = {expected} -> "
          f"{'OK' if ok else 'MISMATCH'}")
    print(f"kernel rates decay: {'OK' if all(mu.real > 0 for mu in kern.rates) else 'BAD'}")
    print("validation complete" + (" (with warnings)" if warned else ""))
    return 0


def _cmd_compare_backends(args) -> int:
    params, dt_override = _params_from_args(args)
    if args.t_max_gamma is None:
        params = replace(params, t_max_gamma=50.0)
    params = validate_params(params)
    geom = desk_scale_geometry(params)
    kern = residue_kernel(params)
    scale = params.lambda_over_gamma / 4.0
    lags = np.linspace(0.0, params.t_max_gamma, args.lags)
    res_vals = kern.lag_values(lags)

    for boundary in (False, True):
        cfg = QuadratureConfig(window_halfwidth_lambdas=args.quad_window,
                               rel_tol=args.quad_rel_tol,
                               include_boundary_term=boundary,
                               truncate_at_zero=args.quad_truncate)
        dev = 0.0
        for s, rv in zip(lags, res_vals):
            qv = quadrature_kernel(float(s), 0.0, params, geom, cfg)
            dev = max(dev, abs(qv - rv) / scale)
        tag = "boundary kept" if boundary else "boundary dropped"
        print(f"kernel residue vs quadrature ({tag}): "
              f"max deviation / (lambda/4) = {dev:.6e} over {args.lags} lags")

    dt = dt_override if dt_override is not None else 1e-3
    grid = make_grid(params.t_max_gamma, dt)
    t_aux = solve_aux(kern, grid)
    t_his = solve_history(kern, grid, stationary=True,
                          lag_table=kern.lag_values(dt * np.arange(grid.n_steps + 2)))
    dev = float(np.max(np.abs(t_aux.amplitude - t_his.amplitude)))
    print(f"solver history vs aux (residue kernel, dt={dt:g}): max |diff| = {dev:.6e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qflight",
        description="Moving-qubit cavity decay, concurrence, and decay-rate studies")
    parser.add_argument("--version", action="version", version=f"qflight {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario")
    _add_param_flags(p)
    _add_run_flags(p)
    _add_quadrature_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("figure", help="run a figure preset batch (fixed caption parameters)")
    p.add_argument("name", choices=("fig2", "fig3", "fig4", "fig5", "fig6", "fig7"))
    p.add_argument("--full-range", action="store_true",
                   help="extend the fig4 velocity grid to beta*omega0 = 120")
    p.add_argument("--dt", dest="dt_gamma", type=float, default=None,
                   help="solver step override for the whole batch")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_figure)

    p = sub.add_parser("sweep", help="scan one parameter axis")
    p.add_argument("--axis", choices=("velocity", "bandwidth", "detuning"),
                   default="velocity")
    p.add_argument("--values", required=True,
                   help="comma-separated, strictly increasing grid values")
    p.add_argument("--at-time", type=float, default=100.0,
                   help="extract concurrence at this gamma*t")
    p.add_argument("--time-average", action="store_true",
                   help="extract the time-averaged concurrence instead")
    p.add_argument("--workers", type=int, default=4)
    _add_param_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("validate", help="parameter + feasibility self-checks")
    _add_param_flags(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("compare-backends", help="kernel and solver cross-checks")
    p.add_argument("--lags", type=int, default=21)
    _add_param_flags(p)
    _add_quadrature_flags(p)
    p.set_defaults(func=_cmd_compare_backends)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
