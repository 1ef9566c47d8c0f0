"""Time loop, scenario set-up, outputs and the convergence-study driver."""
from pathlib import Path

import numpy as np
import pytest

from swnh import analytic, runner
from swnh.config import parse_config
from swnh.errors import CFLViolation, ConfigError
from swnh.runner import build_scenario, run_convergence_study, run_simulation

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
LAKE = dict(scenario="lake_at_rest", x_min=0.0, x_max=25.0, cells=100, bathymetry="bump",
            t_final=1e9)
DAM = dict(scenario="dam_break", x_min=-1.0, x_max=1.0, cells=60, t_final=0.2, h_right=0.25)
SOLITON = dict(scenario="soliton", x_min=-7.5, x_max=7.5, cells=80, cfl=1.0, t_final=0.5,
               bc_left="periodic", bc_right="periodic")


def cfg(base, **kw):
    return parse_config({**base, **kw})


@pytest.mark.parametrize("order", [1, 2])
def test_lake_at_rest_is_steady(order):
    res = run_simulation(cfg(LAKE, order=order, max_steps=300))
    X0 = build_scenario(res.config).state.stack()
    assert res.steps == 300
    assert np.max(np.abs(res.state.stack() - X0)) <= 1e-12


@pytest.mark.parametrize("base", [DAM, SOLITON])
@pytest.mark.parametrize("order", [1, 2])
def test_full_step_conserves_mass(base, order):
    res = run_simulation(cfg(base, order=order))
    m = res.diagnostics["mass"]
    assert np.max(np.abs(m - m[0])) <= 1e-12 * m[0]
    assert np.all(res.diagnostics["max_div_residual"][1:] <= 1e-9 * np.maximum(
        1.0, res.diagnostics["max_u"][1:]))


def test_runs_are_deterministic(tmp_path):
    a = run_simulation(cfg(DAM, order=2, out_dir=str(tmp_path / "a"), snapshot_interval=0.1))
    b = run_simulation(cfg(DAM, order=2, out_dir=str(tmp_path / "b"), snapshot_interval=0.1))
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in files:
        if name.endswith(".csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert np.array_equal(a.state.stack(), b.state.stack())


def test_explicit_alpha_two_matches_default():
    base = dict(SOLITON, order=2)
    a = run_simulation(parse_config(base))
    b = run_simulation(parse_config({**base, "alpha": "2.0"}))
    assert np.array_equal(a.state.stack(), b.state.stack())
    assert np.array_equal(a.pressure.p, b.pressure.p)


def test_alpha_changes_the_solution():
    a = run_simulation(cfg(SOLITON, alpha=1.5))
    b = run_simulation(cfg(SOLITON))
    assert not np.array_equal(a.state.stack(), b.state.stack())
    assert np.all(a.diagnostics["max_div_residual"][1:] <= 1e-9 * 4.0)


def test_hydrostatic_mode_has_no_pressure():
    res = run_simulation(cfg(SOLITON, nonhydrostatic=False))
    assert np.all(res.pressure.p == 0.0)


def test_step_count_and_final_time():
    res = run_simulation(cfg(DAM, t_final=0.013))
    assert res.steps >= 1
    assert res.t == pytest.approx(0.013, abs=1e-15)
    assert run_simulation(cfg(DAM, t_final=0.0)).steps == 0


def test_observer_sees_every_step():
    seen = []
    res = run_simulation(cfg(DAM, max_steps=7), observer=lambda k, t, s, p: seen.append(k))
    assert seen == list(range(1, 8)) and res.steps == 7


def test_cfl_failure_triggers_retries(monkeypatch):
    calls = []
    original = runner.Stepper.__call__

    def flaky(self, state, t, dt):
        calls.append(dt)
        if len(calls) == 1:
            raise CFLViolation("negative depth")
        return original(self, state, t, dt)

    monkeypatch.setattr(runner.Stepper, "__call__", flaky)
    res = run_simulation(cfg(DAM, max_steps=1))
    assert res.steps == 1
    assert calls[1] == pytest.approx(0.5 * calls[0])


def test_persistent_cfl_failure_is_reported(monkeypatch):
    def always(self, state, t, dt):
        raise CFLViolation("negative depth in cell 4")

    monkeypatch.setattr(runner.Stepper, "__call__", always)
    with pytest.raises(CFLViolation, match=r"step 1, t=0: negative depth in cell 4"):
        run_simulation(cfg(DAM))


def test_bowl_second_order_beats_first_order():
    bowl = dict(scenario="parabolic_bowl", x_min=-2.0, x_max=2.0, cells=80, t_final=10.0)
    e1 = run_simulation(cfg(bowl, order=1)).l1_error("H")
    e2 = run_simulation(cfg(bowl, order=2)).l1_error("H")
    assert e2 < e1


def test_bowl_run_is_bounded():
    res = run_simulation(cfg(dict(scenario="parabolic_bowl", x_min=-2.0, x_max=2.0, cells=40,
                                  t_final=10.0, order=2)))
    d = res.diagnostics
    assert np.all(d["min_H"] >= 0.0)
    assert np.all(np.isfinite(d["probe_error"]))
    assert np.all(np.isfinite(res.state.stack()))


def test_entering_soliton_inflow_matches_the_exact_discharge():
    sc = build_scenario(parse_config(CONFIGS / "soliton_entering.cfg"))
    assert sc.left.kind == "given_flux" and callable(sc.left.value)
    sol = analytic.SolitonParams()
    f = analytic.soliton_fields(sol, np.array([0.0]), 3.0, -15.0)
    assert sc.left.at(3.0) == pytest.approx(f.H[0] * f.u[0], rel=1e-14)


def test_reference_is_required_for_errors():
    res = run_simulation(cfg(DAM, max_steps=2))
    with pytest.raises(ConfigError):
        res.l1_error()


def test_convergence_study_marks_failed_meshes(monkeypatch):
    real = runner.run_simulation

    def selective(c):
        if c.cells == 40:
            raise CFLViolation("synthetic failure")
        return real(c)

    monkeypatch.setattr(runner, "run_simulation", selective)
    table = run_convergence_study(cfg(SOLITON, t_final=0.2), [20, 40, 80])
    assert [r.status for r in table.rows][:2] == ["ok", "failed: synthetic failure"]
    assert np.isnan(table.rows[1].l1_error)
    assert np.isfinite(table.order)


def test_convergence_study_needs_two_meshes():
    with pytest.raises(ConfigError):
        run_convergence_study(cfg(SOLITON), [40])


def test_bathymetry_file(tmp_path):
    path = tmp_path / "bed.txt"
    path.write_text("0 0\n12.5 0.3\n25 0\n")
    res = run_simulation(cfg(LAKE, bathymetry=str(path), max_steps=20))
    assert res.bathy.zb.max() == pytest.approx(0.3, abs=0.01)
    with pytest.raises(ConfigError):
        build_scenario(cfg(LAKE, bathymetry=str(tmp_path / "missing.txt")))


@pytest.mark.slow
def test_fine_soliton_meshes_keep_converging():
    # a 30 m box keeps the truncated sech^2 tail (~5e-8) below the discretisation error
    errors = [run_simulation(parse_config(CONFIGS / "soliton.cfg", cells=n, x_min=-15.0,
                                          x_max=15.0)).l1_error("H") for n in (1600, 3200)]
    assert errors[0] / errors[1] >= 2 ** 1.5
