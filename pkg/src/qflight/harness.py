"""Scenario presets, sweeps, and reproducible output files.

A :class:`Scenario` bundles parameters, kernel backend, solver, and the
initial two-qubit state; :func:`run_scenario` produces the full time
series (amplitude, excited population, concurrence, decay rate, Lamb
shift) that the CSV writer and the plot renderers consume.  The
``figure_preset`` factory reproduces the published parameter studies:
velocity scans in the strongly non-Markovian regime, the velocity sweep
of the long-time concurrence, decay-rate panels, bandwidth panels, and
detuning panels.

Output conventions: CSV with the fixed header
``gamma_t,re_c,im_c,abs_c,pop_e,concurrence,gamma_rate,lamb_shift``,
floats at 17 significant digits (lossless round-trip), masked rate cells
empty, plus a gnuplot script and a key=value run manifest per batch.
Identical configuration yields byte-identical CSV.
"""
from __future__ import annotations

import concurrent.futures
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import evolve_two_qubit_elements, rate_series, validate_density_matrix
from .entanglement import bell_psi, concurrence_general, concurrence_x_elements, is_x_state
from .kernel import residue_kernel
from .model import SystemParams, validate_params
from .quadrature import QuadratureConfig, SplineLagKernel
from .volterra import make_grid, solve_aux, solve_history

CSV_HEADER = "gamma_t,re_c,im_c,abs_c,pop_e,concurrence,gamma_rate,lamb_shift"
DEFAULT_DT = 1e-3
REFINED_DT = 2e-4
REFINE_AT_BETA_OMEGA0 = 10.0
MAX_CSV_ROWS = 10000
AMPLITUDE_ZERO_DIP = 1e-4


class ScenarioError(ValueError):
    """Inconsistent scenario configuration."""


@dataclass(frozen=True)
class InitialState:
    """Bell Psi by default; otherwise a product superposition or explicit rho0."""

    kind: str = "bell-psi"
    c_e0: complex = 1.0
    c_g0: complex = 0.0
    rho0: np.ndarray | None = None

    def density_matrix(self) -> np.ndarray:
        if self.kind == "bell-psi":
            return bell_psi()
        if self.kind == "product":
            norm = abs(self.c_e0) ** 2 + abs(self.c_g0) ** 2
            if abs(norm - 1.0) > 1e-12:
                raise ScenarioError("product initial state must be normalized")
            single = np.array([self.c_e0, self.c_g0], dtype=complex)
            psi = np.kron(single, single)
            return np.outer(psi, psi.conj())
        if self.kind == "custom":
            if self.rho0 is None:
                raise ScenarioError("custom initial state needs rho0")
            return validate_density_matrix(self.rho0, 4)
        raise ScenarioError(f"unknown initial state kind '{self.kind}'")

    def describe(self) -> str:
        if self.kind == "product":
            return f"product(c_e0={self.c_e0}, c_g0={self.c_g0})"
        return self.kind


@dataclass(frozen=True)
class Scenario:
    params: SystemParams
    kernel_backend: str = "residue"
    solver: str = "aux"
    initial: InitialState = field(default_factory=InitialState)
    outputs: frozenset = frozenset({"concurrence", "population", "amplitude", "rates"})
    quadrature: QuadratureConfig | None = None
    dt_override: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.kernel_backend not in ("residue", "quadrature"):
            raise ScenarioError(f"unknown kernel backend '{self.kernel_backend}'")
        if self.solver not in ("history", "aux"):
            raise ScenarioError(f"unknown solver '{self.solver}'")
        if self.kernel_backend == "quadrature" and self.solver != "history":
            raise ScenarioError("quadrature backend requires the history solver")


def resolve_dt(scenario: Scenario) -> float:
    """Step policy: explicit override wins; the default step is refined to
    2e-4 when beta*omega0 >= 10 so the kernel oscillation stays resolved
    by >= 300 points per period."""
    if scenario.dt_override is not None:
        return scenario.dt_override
    dt = scenario.params.dt_gamma
    if dt == DEFAULT_DT and scenario.params.beta_omega0_over_gamma >= REFINE_AT_BETA_OMEGA0:
        return REFINED_DT
    return dt


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    gamma_t: np.ndarray
    re_c: np.ndarray
    im_c: np.ndarray
    abs_c: np.ndarray
    pop_e: np.ndarray
    concurrence: np.ndarray
    gamma_rate: np.ndarray
    lamb_shift: np.ndarray
    rate_mask: np.ndarray
    dt_effective: float
    first_concurrence_zero: float | None
    amplitude_zero_count: int


def find_amplitude_zeros(times: np.ndarray, amplitude: np.ndarray,
                         dip: float = AMPLITUDE_ZERO_DIP) -> list[float]:
    """Parabolic-refined times of the isolated amplitude zeros.

    A zero shows up as a local minimum of |c|^2 dipping below ``dip``;
    near a transversal zero |c|^2 is locally quadratic, so the parabola
    vertex through the three nodes localizes it to O(dt^2).
    """
    q = np.abs(amplitude) ** 2
    inner = q[1:-1]
    hits = np.nonzero((inner < dip * dip) & (inner <= q[:-2]) & (inner < q[2:]))[0] + 1
    dt = times[1] - times[0]
    zeros = []
    for i in hits:
        denom = q[i + 1] - 2.0 * q[i] + q[i - 1]
        shift = 0.5 * (q[i - 1] - q[i + 1]) / denom if denom > 0 else 0.0
        zeros.append(float(times[i] + shift * dt))
    return zeros


def run_scenario(s: Scenario) -> ScenarioResult:
    """Solve one scenario end to end and tabulate the time series."""
    params = validate_params(s.params)
    dt = resolve_dt(s)
    grid = make_grid(params.t_max_gamma, dt)
    try:
        if s.kernel_backend == "residue":
            kern = residue_kernel(params)
            if s.solver == "aux":
                traj = solve_aux(kern, grid)
            else:
                traj = solve_history(kern, grid, stationary=True,
                                     lag_table=kern.lag_values(dt * np.arange(grid.n_steps + 2)))
        else:
            qcfg = s.quadrature if s.quadrature is not None else QuadratureConfig()
            if s.quadrature is not None and qcfg.include_boundary_term:
                warnings.warn("quadrature solver path drops the t+t' boundary branch "
                              "(lag-stationary kernel cache)", RuntimeWarning,
                              stacklevel=2)
            kern = SplineLagKernel(params, qcfg, t_max=params.t_max_gamma)
            traj = solve_history(kern, grid, stationary=True)
    except Exception as exc:
        raise ScenarioError(f"scenario '{s.label or s.kernel_backend}' failed: {exc}") from exc

    c = traj.amplitude
    rho0 = s.initial.density_matrix()
    pop_weight = (rho0[0, 0] + rho0[1, 1]).real
    pop = pop_weight * np.abs(c) ** 2

    el = evolve_two_qubit_elements(rho0, c)
    if is_x_state(rho0):
        conc = concurrence_x_elements(el[(0, 0)], el[(1, 1)], el[(2, 2)], el[(3, 3)],
                                      el[(0, 3)], el[(1, 2)])
    else:
        conc = np.empty(len(c))
        for i in range(len(c)):
            rho = np.zeros((4, 4), dtype=complex)
            for (a, b), v in el.items():
                rho[a, b] = v[i]
                if a != b:
                    rho[b, a] = np.conj(v[i])
            conc[i] = concurrence_general(rho).value

    rates = rate_series(traj)
    zeros = find_amplitude_zeros(traj.times, c)
    return ScenarioResult(
        scenario=s,
        gamma_t=traj.times,
        re_c=c.real.copy(),
        im_c=c.imag.copy(),
        abs_c=np.abs(c),
        pop_e=pop,
        concurrence=conc,
        gamma_rate=rates.gamma_t,
        lamb_shift=rates.omega_t,
        rate_mask=rates.mask,
        dt_effective=dt,
        first_concurrence_zero=zeros[0] if zeros else None,
        amplitude_zero_count=len(zeros),
    )


def _fmt_axis(value: float) -> str:
    return f"{value:g}".replace(".", "p").replace("-", "m")


def figure_preset(name: str, full_range: bool = False) -> list[Scenario]:
    """Exact parameter sets of the published figures, gamma units."""
    base = SystemParams(lambda_over_gamma=0.01, delta_over_gamma=0.0,
                        beta_omega0_over_gamma=0.0, t_max_gamma=100.0)
    out_c = frozenset({"concurrence", "amplitude", "population"})
    out_r = frozenset({"rates", "amplitude"})
    scenarios: list[Scenario] = []
    if name == "fig2":
        for v in (0.0, 0.01, 0.1, 1.0):
            scenarios.append(Scenario(
                params=replace(base, beta_omega0_over_gamma=v),
                outputs=out_c, label=f"fig2_bw0_{_fmt_axis(v)}"))
    elif name == "fig3":
        for v in (10.0, 20.0, 30.0, 40.0):
            scenarios.append(Scenario(
                params=replace(base, beta_omega0_over_gamma=v),
                outputs=out_c, label=f"fig3_bw0_{_fmt_axis(v)}"))
    elif name == "fig4":
        top = 24 if full_range else 8
        for n in range(top + 1):
            v = 5.0 * n
            scenarios.append(Scenario(
                params=replace(base, beta_omega0_over_gamma=v),
                outputs=frozenset({"concurrence"}), label=f"fig4_bw0_{_fmt_axis(v)}"))
    elif name == "fig5":
        for v in (0.0, 0.01, 0.1, 1.0, 10.0, 20.0, 30.0, 40.0):
            scenarios.append(Scenario(
                params=replace(base, beta_omega0_over_gamma=v),
                outputs=out_r, label=f"fig5_bw0_{_fmt_axis(v)}"))
    elif name == "fig6":
        for v in (0.0, 0.5, 5.0, 10.0):
            for lam in (0.01, 0.1, 1.0):
                scenarios.append(Scenario(
                    params=replace(base, beta_omega0_over_gamma=v, lambda_over_gamma=lam),
                    outputs=out_c,
                    label=f"fig6_bw0_{_fmt_axis(v)}_lam_{_fmt_axis(lam)}"))
    elif name == "fig7":
        for v in (0.0, 0.1, 0.3, 0.5):
            for det in (0.01, 0.05, 0.1, 0.5):
                scenarios.append(Scenario(
                    params=replace(base, beta_omega0_over_gamma=v, delta_over_gamma=det),
                    outputs=out_c,
                    label=f"fig7_bw0_{_fmt_axis(v)}_delta_{_fmt_axis(det)}"))
    else:
        raise ScenarioError(f"unknown figure preset '{name}'")
    return scenarios


@dataclass(frozen=True)
class Observable:
    """Scalar extracted from a run: concurrence at a time, or its time average."""

    kind: str = "at_time"
    time_gamma: float = 100.0

    def extract(self, result: ScenarioResult) -> float:
        if self.kind == "at_time":
            idx = int(round(self.time_gamma / result.dt_effective))
            idx = min(max(idx, 0), len(result.gamma_t) - 1)
            return float(result.concurrence[idx])
        if self.kind == "time_average":
            return float(np.trapezoid(result.concurrence, result.gamma_t)
                         / (result.gamma_t[-1] - result.gamma_t[0]))
        raise ScenarioError(f"unknown observable '{self.kind}'")


_SWEEP_FIELDS = {
    "velocity": "beta_omega0_over_gamma",
    "bandwidth": "lambda_over_gamma",
    "detuning": "delta_over_gamma",
}


@dataclass(frozen=True)
class SweepResult:
    axis: str
    axis_values: tuple
    values: tuple         # observable per grid point, None where the run failed
    errors: tuple         # error message per grid point, None on success
    observable: Observable
    kernel_backend: str
    solver: str
    dt_values: tuple


def sweep_param(axis: str, grid_values, params: SystemParams,
                observable: Observable | None = None, *,
                kernel_backend: str = "residue", solver: str = "aux",
                dt_override: float | None = None,
                max_workers: int = 4) -> SweepResult:
    """One solver run per grid point on a bounded worker pool.

    Per-point failures are recorded and the sweep continues; result
    assembly preserves grid order.
    """
    if axis not in _SWEEP_FIELDS:
        raise ScenarioError(f"unknown sweep axis '{axis}'")
    values = [float(v) for v in grid_values]
    if not values:
        raise ScenarioError("sweep grid must be nonempty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ScenarioError("sweep grid must be strictly increasing")
    observable = observable if observable is not None else Observable()

    def one(v: float):
        p = replace(params, **{_SWEEP_FIELDS[axis]: v})
        sc = Scenario(params=p, kernel_backend=kernel_backend,
                      solver=("history" if kernel_backend == "quadrature" else solver),
                      dt_override=dt_override, label=f"sweep_{axis}_{_fmt_axis(v)}")
        res = run_scenario(sc)
        return observable.extract(res), res.dt_effective

    out: list = [None] * len(values)
    err: list = [None] * len(values)
    dts: list = [None] * len(values)
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        futures = {pool.submit(one, v): i for i, v in enumerate(values)}
        for fut in concurrent.futures.as_completed(futures):
            i = futures[fut]
            try:
                out[i], dts[i] = fut.result()
            except Exception as exc:
                err[i] = str(exc)
    return SweepResult(axis=axis, axis_values=tuple(values), values=tuple(out),
                       errors=tuple(err), observable=observable,
                       kernel_backend=kernel_backend, solver=solver, dt_values=tuple(dts))


def sweep_velocity(grid_values, params: SystemParams,
                   observable: Observable | None = None, **kw) -> SweepResult:
    return sweep_param("velocity", grid_values, params, observable, **kw)


def _f17(x: float) -> str:
    return f"{x:.17g}"


def scenario_csv_text(result: ScenarioResult, stride: int | None = None) -> str:
    """CSV body for one run; masked rate cells are empty, never NaN."""
    n = len(result.gamma_t)
    if stride is None:
        stride = max(1, math.ceil(n / MAX_CSV_ROWS))
    idx = list(range(0, n, stride))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    lines = [CSV_HEADER]
    for i in idx:
        rate = "" if result.rate_mask[i] else _f17(result.gamma_rate[i])
        shift = "" if result.rate_mask[i] else _f17(result.lamb_shift[i])
        lines.append(",".join((
            _f17(result.gamma_t[i]), _f17(result.re_c[i]), _f17(result.im_c[i]),
            _f17(result.abs_c[i]), _f17(result.pop_e[i]), _f17(result.concurrence[i]),
            rate, shift)))
    return "\n".join(lines) + "\n"


def _manifest_lines(result: ScenarioResult, stride: int, rows: int) -> list[str]:
    s = result.scenario
    p = s.params
    lines = [
        f"scenario={s.label or 'unnamed'}",
        f"lambda={_f17(p.lambda_over_gamma)}",
        f"delta={_f17(p.delta_over_gamma)}",
        f"beta_omega0={_f17(p.beta_omega0_over_gamma)}",
        f"omega0={_f17(p.omega0_over_gamma)}",
        f"t_max={_f17(p.t_max_gamma)}",
        f"dt={_f17(result.dt_effective)}",
        f"beta={_f17(p.beta)}",
        f"kernel={s.kernel_backend}",
        f"solver={s.solver}",
        f"initial={s.initial.describe()}",
        f"outputs={','.join(sorted(s.outputs))}",
        f"stride={stride}",
        f"rows={rows}",
        "first_concurrence_zero=" + ("" if result.first_concurrence_zero is None
                                     else _f17(result.first_concurrence_zero)),
        f"amplitude_zero_count={result.amplitude_zero_count}",
    ]
    if s.kernel_backend == "quadrature":
        q = s.quadrature if s.quadrature is not None else QuadratureConfig()
        lines += [
            f"quadrature_window={_f17(q.window_halfwidth_lambdas)}",
            f"quadrature_rel_tol={_f17(q.rel_tol)}",
            # the solver path always drops the t+t' boundary branch
            "quadrature_boundary_term=False",
            f"quadrature_truncate_at_zero={q.truncate_at_zero}",
        ]
    return lines


def _gnuplot_script(csv_names: list[str], titles: list[str], out_png: str,
                    ylabel: str, ycol: int) -> str:
    lines = [
        "set datafile separator ','",
        "set terminal pngcairo size 1000,700",
        f"set output '{out_png}'",
        "set xlabel 'gamma t'",
        f"set ylabel '{ylabel}'",
        "set key outside",
    ]
    plots = [f"'{name}' using 1:{ycol} with lines title '{title}'"
             for name, title in zip(csv_names, titles)]
    lines.append("plot \\\n    " + ", \\\n    ".join(plots))
    return "\n".join(lines) + "\n"


def write_outputs(results, path_prefix, stride: int | None = None) -> list[Path]:
    """CSV per run, one gnuplot script, and a run manifest, under path_prefix.

    Accepts a single ScenarioResult, a list of them, or a SweepResult.
    Returns the written paths.
    """
    prefix = Path(path_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if isinstance(results, SweepResult):
        csv_path = prefix.with_suffix(".csv")
        lines = [f"{results.axis},{results.observable.kind},error"]
        for v, val, err in zip(results.axis_values, results.values, results.errors):
            lines.append(",".join((_f17(v), "" if val is None else _f17(val), err or "")))
        _write_text(csv_path, "\n".join(lines) + "\n")
        written.append(csv_path)
        man = [
            f"artifact=qflight {__version__}",
            f"sweep_axis={results.axis}",
            f"observable={results.observable.kind}",
            f"observable_time={_f17(results.observable.time_gamma)}",
            f"kernel={results.kernel_backend}",
            f"solver={results.solver}",
            "dt_values=" + ",".join("" if d is None else _f17(d) for d in results.dt_values),
        ]
        man_path = Path(str(prefix) + "_manifest.txt")
        _write_text(man_path, "\n".join(man) + "\n")
        written.append(man_path)
        gp_path = prefix.with_suffix(".gnuplot")
        _write_text(gp_path, "\n".join([
            "set datafile separator ','",
            "set terminal pngcairo size 1000,700",
            f"set output '{prefix.name}.png'",
            f"set xlabel '{results.axis}'",
            "set ylabel 'concurrence'",
            f"plot '{csv_path.name}' using 1:2 with linespoints pointtype 3 title 'sweep'",
        ]) + "\n")
        written.append(gp_path)
        return written

    batch = results if isinstance(results, list) else [results]
    csv_names, titles, man_lines = [], [], [f"artifact=qflight {__version__}"]
    rates_batch = all("rates" in r.scenario.outputs and "concurrence" not in r.scenario.outputs
                      for r in batch)
    for r in batch:
        n = len(r.gamma_t)
        st = stride if stride is not None else max(1, math.ceil(n / MAX_CSV_ROWS))
        label = r.scenario.label or "run"
        stem = label.removeprefix(prefix.name + "_") if label != prefix.name else label
        csv_path = Path(f"{prefix}_{stem}.csv") if len(batch) > 1 else prefix.with_suffix(".csv")
        text = scenario_csv_text(r, stride=st)
        _write_text(csv_path, text)
        written.append(csv_path)
        csv_names.append(csv_path.name)
        titles.append(label)
        man_lines.append("")
        man_lines.extend(_manifest_lines(r, st, text.count("\n") - 1))
    gp_path = prefix.with_suffix(".gnuplot")
    ycol, ylabel = (7, "Gamma(t)/gamma") if rates_batch else (6, "concurrence")
    _write_text(gp_path, _gnuplot_script(csv_names, titles, prefix.name + ".png",
                                         ylabel, ycol))
    written.append(gp_path)
    man_path = Path(str(prefix) + "_manifest.txt")
    _write_text(man_path, "\n".join(man_lines) + "\n")
    written.append(man_path)
    return written


def _write_text(path: Path, text: str) -> None:
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


def read_config(path) -> dict:
    """Plain-text key=value file; blank lines and # comments ignored."""
    values = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{path}:{lineno}: expected key=value, got '{raw.strip()}'")
        key, val = line.split("=", 1)
        values[key.strip()] = val.strip()
    return values
