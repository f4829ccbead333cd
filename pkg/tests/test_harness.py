import numpy as np
import pytest

from qflight.harness import (
    CSV_HEADER,
    InitialState,
    Observable,
    Scenario,
    ScenarioError,
    figure_preset,
    find_amplitude_zeros,
    read_config,
    resolve_dt,
    run_scenario,
    scenario_csv_text,
    sweep_param,
    sweep_velocity,
    write_outputs,
)
from qflight.model import SystemParams
from qflight.volterra import stationary_analytic


@pytest.fixture(scope="module")
def fig2_fast_results():
    # short-horizon fig2-style runs used by several tests
    out = {}
    for bw0 in (0.0, 1.0):
        p = SystemParams(beta_omega0_over_gamma=bw0, t_max_gamma=20.0)
        out[bw0] = run_scenario(Scenario(params=p, label=f"t_{bw0}"))
    return out


def test_preset_fig2_parameters():
    scenarios = figure_preset("fig2")
    assert [s.params.beta_omega0_over_gamma for s in scenarios] == [0.0, 0.01, 0.1, 1.0]
    assert all(s.params.lambda_over_gamma == 0.01 for s in scenarios)
    assert all(s.params.delta_over_gamma == 0.0 for s in scenarios)
    assert all(s.params.t_max_gamma == 100.0 for s in scenarios)


def test_preset_fig3_fig5_fig6_fig7_shapes():
    assert [s.params.beta_omega0_over_gamma for s in figure_preset("fig3")] == \
        [10.0, 20.0, 30.0, 40.0]
    assert len(figure_preset("fig5")) == 8
    fig6 = figure_preset("fig6")
    assert len(fig6) == 12
    assert sorted({s.params.lambda_over_gamma for s in fig6}) == [0.01, 0.1, 1.0]
    assert sorted({s.params.beta_omega0_over_gamma for s in fig6}) == [0.0, 0.5, 5.0, 10.0]
    fig7 = figure_preset("fig7")
    assert len(fig7) == 16
    assert all(s.params.lambda_over_gamma == 0.01 for s in fig7)
    assert sorted({s.params.delta_over_gamma for s in fig7}) == [0.01, 0.05, 0.1, 0.5]
    assert sorted({s.params.beta_omega0_over_gamma for s in fig7}) == [0.0, 0.1, 0.3, 0.5]


def test_preset_fig4_grid():
    assert [s.params.beta_omega0_over_gamma for s in figure_preset("fig4")] == \
        [5.0 * n for n in range(9)]
    assert [s.params.beta_omega0_over_gamma for s in figure_preset("fig4", full_range=True)] == \
        [5.0 * n for n in range(25)]


def test_preset_unknown_name():
    with pytest.raises(ScenarioError, match="unknown figure preset"):
        figure_preset("fig9")


def test_scenario_backend_solver_combination():
    with pytest.raises(ScenarioError, match="quadrature backend requires"):
        Scenario(params=SystemParams(), kernel_backend="quadrature", solver="aux")
    with pytest.raises(ScenarioError, match="unknown solver"):
        Scenario(params=SystemParams(), solver="magic")


def test_dt_policy():
    fast = Scenario(params=SystemParams(beta_omega0_over_gamma=10.0))
    assert resolve_dt(fast) == 2e-4
    slow = Scenario(params=SystemParams(beta_omega0_over_gamma=1.0))
    assert resolve_dt(slow) == 1e-3
    explicit = Scenario(params=SystemParams(beta_omega0_over_gamma=10.0, dt_gamma=5e-4))
    assert resolve_dt(explicit) == 5e-4
    overridden = Scenario(params=SystemParams(beta_omega0_over_gamma=10.0),
                          dt_override=1e-3)
    assert resolve_dt(overridden) == 1e-3


def test_initial_row_conventions(fig2_fast_results):
    r = fig2_fast_results[1.0]
    assert r.concurrence[0] == pytest.approx(1.0, abs=1e-15)
    assert r.pop_e[0] == pytest.approx(0.5, abs=1e-15)
    assert r.re_c[0] == 1.0 and r.im_c[0] == 0.0


def test_stationary_concurrence_matches_oracle(fig2_fast_results):
    r = fig2_fast_results[0.0]
    idx = int(round(10.0 / r.dt_effective))
    want = abs(stationary_analytic(0.01 / 4, 0.01, 10.0)) ** 4
    assert r.concurrence[idx] == pytest.approx(want, rel=1e-6)
    assert want == pytest.approx(0.6039222, rel=1e-5)


def test_find_amplitude_zeros_locates_first_collapse():
    p = SystemParams(t_max_gamma=40.0)
    r = run_scenario(Scenario(params=p))
    assert r.first_concurrence_zero == pytest.approx(33.587635, abs=2e-3)
    assert r.amplitude_zero_count == 1


def test_find_amplitude_zeros_none_for_protected_run(fig2_fast_results):
    assert fig2_fast_results[1.0].first_concurrence_zero is None


def test_find_amplitude_zeros_helper():
    t = np.linspace(0, 40, 40001)
    amp = stationary_analytic(0.01 / 4, 0.01, t)
    zeros = find_amplitude_zeros(t, amp)
    assert len(zeros) == 1
    assert zeros[0] == pytest.approx(33.587635, abs=2e-3)


def test_product_initial_state_runs():
    p = SystemParams(t_max_gamma=5.0)
    init = InitialState(kind="product", c_e0=1 / np.sqrt(2), c_g0=1 / np.sqrt(2))
    r = run_scenario(Scenario(params=p, initial=init))
    # separable start; the general eigen path floors near sqrt(eps) on pure states
    assert r.concurrence[0] == pytest.approx(0.0, abs=1e-7)
    assert r.pop_e[0] == pytest.approx(0.5, abs=1e-12)


def test_sweep_single_point_equals_scenario():
    p = SystemParams(t_max_gamma=20.0)
    obs = Observable(kind="at_time", time_gamma=20.0)
    sweep = sweep_velocity([0.0], p, obs)
    direct = obs.extract(run_scenario(Scenario(params=p)))
    assert sweep.values[0] == direct   # same code path, identical floats
    assert sweep.errors == (None,)


def test_sweep_validates_grid():
    p = SystemParams()
    with pytest.raises(ScenarioError, match="strictly increasing"):
        sweep_velocity([1.0, 1.0], p)
    with pytest.raises(ScenarioError, match="nonempty"):
        sweep_velocity([], p)
    with pytest.raises(ScenarioError, match="unknown sweep axis"):
        sweep_param("frequency", [1.0], p)


def test_sweep_records_failures_and_continues():
    p = SystemParams(t_max_gamma=5.0)
    sweep = sweep_param("bandwidth", [-1.0, 0.01], p)
    assert sweep.errors[0] is not None and "lambda" in sweep.errors[0]
    assert sweep.errors[1] is None
    assert sweep.values[0] is None and sweep.values[1] is not None


def test_sweep_time_average_monotone_for_slow_velocities():
    p = SystemParams(t_max_gamma=100.0)
    obs = Observable(kind="time_average")
    sweep = sweep_velocity([0.01, 0.1, 1.0], p, obs)
    vals = sweep.values
    assert vals[0] < vals[1] < vals[2]


def test_time_average_matches_manual_trapezoid(fig2_fast_results):
    r = fig2_fast_results[0.0]
    obs = Observable(kind="time_average")
    want = np.trapezoid(r.concurrence, r.gamma_t) / (r.gamma_t[-1] - r.gamma_t[0])
    assert obs.extract(r) == want


def test_csv_header_and_digits(fig2_fast_results):
    text = scenario_csv_text(fig2_fast_results[0.0], stride=1)
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER
    assert lines[0] == "gamma_t,re_c,im_c,abs_c,pop_e,concurrence,gamma_rate,lamb_shift"
    # 17-significant-digit round trip
    row = lines[3].split(",")
    assert float(row[0]) == fig2_fast_results[0.0].gamma_t[2]
    assert float(row[5]) == fig2_fast_results[0.0].concurrence[2]
    assert "nan" not in text.lower()


def test_csv_masked_cells_empty():
    from qflight.harness import ScenarioResult

    base = run_scenario(Scenario(params=SystemParams(t_max_gamma=1.0, dt_gamma=0.5)))
    mask = np.array([False, True, False])
    forged = ScenarioResult(
        scenario=base.scenario, gamma_t=base.gamma_t, re_c=base.re_c, im_c=base.im_c,
        abs_c=base.abs_c, pop_e=base.pop_e, concurrence=base.concurrence,
        gamma_rate=np.array([0.0, 0.0, 0.1]), lamb_shift=np.array([0.0, 0.0, 0.2]),
        rate_mask=mask, dt_effective=base.dt_effective,
        first_concurrence_zero=None, amplitude_zero_count=0)
    lines = scenario_csv_text(forged, stride=1).splitlines()
    assert lines[2].endswith(",,")
    assert lines[3].split(",")[6] == "0.10000000000000001"


def test_csv_stride_caps_rows():
    r = run_scenario(Scenario(params=SystemParams(t_max_gamma=30.0)))
    text = scenario_csv_text(r)
    n_rows = text.count("\n") - 1
    assert n_rows <= 10002
    last = text.rstrip("\n").rsplit("\n", 1)[1]
    assert float(last.split(",")[0]) == r.gamma_t[-1]   # final row always written


def test_csv_determinism(fig2_fast_results):
    p = SystemParams(beta_omega0_over_gamma=1.0, t_max_gamma=20.0)
    again = run_scenario(Scenario(params=p, label="t_1.0"))
    assert scenario_csv_text(again) == scenario_csv_text(fig2_fast_results[1.0])


def test_write_outputs_figure_batch(tmp_path):
    scenarios = [Scenario(params=SystemParams(beta_omega0_over_gamma=v, t_max_gamma=5.0),
                          label=f"fig2_bw0_{v:g}".replace(".", "p"))
                 for v in (0.0, 0.01, 0.1, 1.0)]
    results = [run_scenario(s) for s in scenarios]
    paths = write_outputs(results, tmp_path / "fig2")
    csvs = [p for p in paths if p.suffix == ".csv"]
    assert len(csvs) == 4
    script = next(p for p in paths if p.suffix == ".gnuplot")
    body = script.read_text()
    assert body.count("using 1:6") == 4    # four overlaid concurrence curves
    manifest = next(p for p in paths if p.name.endswith("_manifest.txt"))
    mtext = manifest.read_text()
    assert "kernel=residue" in mtext
    assert "solver=aux" in mtext
    assert "stride=" in mtext
    assert "first_concurrence_zero=" in mtext


def test_write_outputs_deterministic_bytes(tmp_path):
    sc = Scenario(params=SystemParams(t_max_gamma=5.0), label="det")
    a = write_outputs(run_scenario(sc), tmp_path / "a")
    b = write_outputs(run_scenario(sc), tmp_path / "b")
    assert a[0].read_bytes() == b[0].read_bytes()


def test_write_outputs_sweep(tmp_path):
    p = SystemParams(t_max_gamma=5.0)
    sweep = sweep_velocity([0.0, 1.0], p, Observable(kind="at_time", time_gamma=5.0))
    paths = write_outputs(sweep, tmp_path / "vsweep")
    csv = next(p_ for p_ in paths if p_.suffix == ".csv")
    lines = csv.read_text().splitlines()
    assert lines[0] == "velocity,at_time,error"
    assert len(lines) == 3


def test_rates_batch_plot_column(tmp_path):
    sc = Scenario(params=SystemParams(t_max_gamma=5.0),
                  outputs=frozenset({"rates"}), label="r")
    paths = write_outputs([run_scenario(sc), run_scenario(sc)], tmp_path / "fig5ish")
    script = next(p for p in paths if p.suffix == ".gnuplot")
    assert "using 1:7" in script.read_text()


def test_read_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nlambda = 0.1\ndelta=0.5\n\nbeta_omega0 = 2 # trailing\n")
    values = read_config(cfg)
    assert values == {"lambda": "0.1", "delta": "0.5", "beta_omega0": "2"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("lambda 0.1\n")
    with pytest.raises(ScenarioError, match="key=value"):
        read_config(bad)


def test_quadrature_backend_scenario_smoke():
    p = SystemParams(beta_omega0_over_gamma=1.0, t_max_gamma=10.0)
    r = run_scenario(Scenario(params=p, kernel_backend="quadrature", solver="history",
                              label="quad"))
    ref = run_scenario(Scenario(params=p, label="res"))
    assert np.max(np.abs(r.concurrence - ref.concurrence)) <= 1e-3
