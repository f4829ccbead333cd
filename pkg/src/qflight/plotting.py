"""Matplotlib rendering of scenario batches and sweeps to image files.

The CSV + gnuplot outputs stay the diffable record; these renderers give
an immediate visual check without leaving Python.  Figure-preset batches
are grouped into panels the way the published figures are (velocity
panels for the rate study, one panel per velocity for the bandwidth and
detuning studies).
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .harness import ScenarioResult, SweepResult


def _mask_to_nan(values, mask):
    import numpy as np

    out = np.array(values, dtype=float)
    out[mask] = np.nan      # gaps in the line, never written to CSV
    return out


def render_scenarios(results: list[ScenarioResult], out_path, *,
                     quantity: str = "concurrence", group_by: str | None = None,
                     title: str = "") -> Path:
    """One PNG; curves overlaid on a single axes or split into panels.

    quantity: "concurrence", "population", "amplitude", or "rates".
    group_by: optional scenario attribute ("beta_omega0" | "lambda" |
    "delta"), or a callable result -> key, splitting the batch into one
    panel per distinct key.
    """
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    def field_of(r: ScenarioResult):
        if callable(group_by):
            return group_by(r)
        p = r.scenario.params
        return {"beta_omega0": p.beta_omega0_over_gamma,
                "lambda": p.lambda_over_gamma,
                "delta": p.delta_over_gamma}[group_by]

    if group_by is None:
        groups = [(None, results)]
    else:
        keys = sorted({field_of(r) for r in results})
        groups = [(k, [r for r in results if field_of(r) == k]) for k in keys]

    ncols = 2 if len(groups) > 1 else 1
    nrows = (len(groups) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(6.4 * ncols, 4.2 * nrows),
                             squeeze=False)
    for ax in axes.flat[len(groups):]:
        ax.set_visible(False)

    ylabels = {"concurrence": r"$C_\Psi$", "population": r"$\rho_{ee}$",
               "amplitude": r"$|\tilde C_e|$", "rates": r"$\Gamma(t)/\gamma$"}
    for (key, members), ax in zip(groups, axes.flat):
        for r in members:
            p = r.scenario.params
            label = (rf"$\beta\omega_0={p.beta_omega0_over_gamma:g}\gamma$, "
                     rf"$\lambda={p.lambda_over_gamma:g}\gamma$, "
                     rf"$\Delta={p.delta_over_gamma:g}\gamma$")
            if quantity == "concurrence":
                ax.plot(r.gamma_t, r.concurrence, lw=1.0, label=label)
            elif quantity == "population":
                ax.plot(r.gamma_t, r.pop_e, lw=1.0, label=label)
            elif quantity == "amplitude":
                ax.plot(r.gamma_t, r.abs_c, lw=1.0, label=label)
            elif quantity == "rates":
                ax.plot(r.gamma_t, _mask_to_nan(r.gamma_rate, r.rate_mask),
                        lw=0.8, label=label)
            else:
                raise ValueError(f"unknown quantity '{quantity}'")
        ax.set_xlabel(r"$\gamma t$")
        ax.set_ylabel(ylabels[quantity])
        if key is not None:
            ax.set_title(f"{group_by} = {key:g}")
        ax.legend(fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_sweep(sweep: SweepResult, out_path, title: str = "") -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    xs = [x for x, v in zip(sweep.axis_values, sweep.values) if v is not None]
    ys = [v for v in sweep.values if v is not None]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(xs, ys, "*:", ms=9)
    ax.set_xlabel(sweep.axis)
    obs = sweep.observable
    ax.set_ylabel("concurrence at $\\gamma t={:g}$".format(obs.time_gamma)
                  if obs.kind == "at_time" else "time-averaged concurrence")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
