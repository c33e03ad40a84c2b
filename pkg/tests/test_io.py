import json
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from binmix.cli import main
from binmix.config import ConfigError, RunConfig, load_config, parse_config, serialize_config
from binmix.grid import GridSpec
from binmix.nondim import (METHANE_DECANE_SCALES, CharacteristicScales, methane_decane_physical,
                           nondimensionalize, scale_factor, KINDS)
from binmix.output import RunLock, format_value, read_csv_field, write_csv_field, write_vtk
from binmix.presets import PRESET_NAMES, make_initial, preset_config, star_indicator
from binmix.runner import dispersion_table, refinement_study, run, write_table


def small(name="accuracy", n=16, steps=10, **out):
    cfg = preset_config(name)
    cfg = cfg.update("grid", Nx=n, Ny=n).update("time", steps=steps)
    return cfg.update("output", **out) if out else cfg


# config ----------------------------------------------------------------------------

finite = st.floats(1e-8, 1e8, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(dt=finite, Lx=finite, N=st.integers(2, 512), chi=st.floats(-10, 10), hydro=st.booleans(),
       steps=st.one_of(st.none(), st.integers(1, 10**6)), Tc=st.tuples(finite, finite),
       kind=st.sampled_from(["double-well", "flory-huggins", "peng-robinson"]))
def test_config_round_trip(dt, Lx, N, chi, hydro, steps, Tc, kind):
    cfg = (RunConfig().update("time", dt=dt, steps=steps).update("grid", Lx=Lx, Nx=N)
           .update("energy", chi=chi, Tc=Tc, kind=kind).update("model", hydro=hydro))
    assert parse_config(serialize_config(cfg)) == cfg


def test_presets_round_trip_and_ship(tmp_path):
    root = os.path.join(os.path.dirname(__file__), os.pardir, "configs")
    for name in ("accuracy", "fh-perturb", "pr-droplet"):
        cfg = preset_config(name)
        assert parse_config(serialize_config(cfg)) == cfg
        assert load_config(os.path.join(root, f"{name}.ini")) == cfg


@pytest.mark.parametrize("text", [
    "[grid]\nNz = 4\n",
    "[mystery]\na = 1\n",
    "[time]\ndt = -1\n",
    "[grid]\nNx = four\n",
    "[energy]\nkind = van-der-waals\n",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        preset_config("nope")
    assert set(PRESET_NAMES) >= {"accuracy", "fh-perturb", "pr-droplet", "from-file"}


# non-dimensionalization -------------------------------------------------------------

def test_identity_scales_change_nothing():
    s = CharacteristicScales()
    assert all(scale_factor(s, k) == 1.0 for k in KINDS)


def test_methane_decane_values():
    out = nondimensionalize(METHANE_DECANE_SCALES, methane_decane_physical())
    assert out["T"] == pytest.approx(1.20879, rel=1e-4)
    assert out["Tc"] == pytest.approx((2.2626, 0.69804), rel=1e-4)
    assert out["Pc"] == pytest.approx((1.34951, 2.95134), rel=1e-4)
    assert out["molar_mass"] == pytest.approx((8.86878, 1.0), rel=1e-4)
    assert out["R"] == pytest.approx(1.45658, rel=1e-4)
    assert out["M1"] == pytest.approx(9.71362e-4, rel=1e-4)
    assert out["Re_eta_s"] == pytest.approx(1.0, rel=1e-4)
    assert out["Re_eta_v"] == pytest.approx(3.0303, rel=1e-4)
    assert out["kappa_n11"] == pytest.approx(1.80416e-3, rel=1e-4)
    assert out["kappa_n12"] == pytest.approx(1.43980e-4, rel=1e-4)
    assert out["kappa_n22"] == pytest.approx(4.59607e-5, rel=1e-4)
    assert out["domain"] == pytest.approx((-2.0, 2.0))


def test_nondim_rejects_bad_input():
    with pytest.raises(ValueError):
        CharacteristicScales(t0=0.0)
    with pytest.raises(ValueError):
        nondimensionalize(CharacteristicScales(), {"colour": {"x": 1.0}})


def test_nondim_cli(tmp_path, capsys):
    (tmp_path / "s.ini").write_text("[scales]\nt0 = 2\nl0 = 1\n")
    (tmp_path / "p.ini").write_text("[viscosity]\neta = 0.5\n[time]\nT = 4\n")
    assert main(["nondim", "--scales", str(tmp_path / "s.ini"), "--params", str(tmp_path / "p.ini")]) == 0
    out = capsys.readouterr().out
    assert "eta = 1.0000000000000000e0" in out and "Re_eta = 1.0000000000000000e0" in out
    assert "T = 2.0000000000000000e0" in out


# files -----------------------------------------------------------------------------

def test_number_format():
    assert format_value(1.0) == "1.0000000000000000e0"
    assert format_value(-0.125) == "-1.2500000000000000e-1"
    assert format_value(7) == "7"
    assert format_value(float("nan")) == "nan"


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_number_format_round_trips(x):
    assert float(format_value(x)) == x


def test_csv_layout_and_round_trip(tmp_path, rng):
    g = GridSpec(2.0, 1.0, 2, 2)
    p = tmp_path / "f.csv"
    write_csv_field(p, "rho1", np.array([[1.0, 2.0], [3.0, 4.0]]), g, t=0.5)
    lines = p.read_text().splitlines()
    assert lines[0] == ("# field=rho1 Nx=2 Ny=2 hx=1.0000000000000000e0 hy=5.0000000000000000e-1 "
                        "t=5.0000000000000000e-1")
    assert lines[1] == "1.0000000000000000e0,2.0000000000000000e0"
    assert len(lines) == 3
    vals = rng.standard_normal((5, 7)) * 10.0 ** rng.integers(-300, 300, (5, 7))
    write_csv_field(p, "x", vals, GridSpec(1, 1, 7, 5))
    back, meta = read_csv_field(p)
    assert np.array_equal(back, vals) and meta["Nx"] == 7 and meta["Ny"] == 5


def test_vtk_header(tmp_path):
    g = GridSpec(2.0, 1.0, 3, 2, -1.0, 0.0)
    p = tmp_path / "s.vtk"
    write_vtk(p, {"rho1": np.ones((2, 3)), "rho2": np.zeros((2, 3))}, g)
    lines = p.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2:5] == ["ASCII", "DATASET STRUCTURED_POINTS", "DIMENSIONS 4 3 1"]
    assert lines[7] == "CELL_DATA 6"
    assert lines[8:10] == ["SCALARS rho1 double 1", "LOOKUP_TABLE default"]
    assert len(lines) == 8 + 2 * (2 + 6)
    with pytest.raises(ValueError):
        write_vtk(p, {"u": np.ones((2, 4))}, g)


# runs ------------------------------------------------------------------------------

def test_run_outputs(tmp_path):
    cfg = small(snapshot_interval=5, format="both")
    res = run(cfg, out_dir=str(tmp_path))
    assert res.status == "ok"
    rows = (tmp_path / "diagnostics.csv").read_text().splitlines()
    assert rows[0] == "step,time,energy,mass1,mass2,krylov_iters,residual"
    assert len(rows) == 11 and all(len(r.split(",")) == 7 for r in rows)
    diss = (tmp_path / "dissipation.csv").read_text().splitlines()
    assert len(diss) == 11
    for tag in ("0000000", "0000005", "0000010"):
        assert (tmp_path / f"snap_{tag}" / "rho1.csv").exists()
        assert (tmp_path / f"snap_{tag}.vtk").exists()
    assert load_config(tmp_path / "config.ini") == cfg
    assert not (tmp_path / ".binmix.lock").exists()


def test_runs_are_bitwise_deterministic(tmp_path):
    cfg = small(steps=5, snapshot_interval=5)
    run(cfg, out_dir=str(tmp_path / "a"))
    run(cfg, out_dir=str(tmp_path / "b"))
    for rel in ("diagnostics.csv", "dissipation.csv", "snap_0000005/rho1.csv", "snap_0000005/u.csv"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_lock_refuses_second_writer(tmp_path):
    with RunLock(str(tmp_path)):
        with pytest.raises(FileExistsError):
            run(small(steps=1), out_dir=str(tmp_path))
        assert main(["run", "--config", _write_cfg(tmp_path, small(steps=1)),
                     "--out", str(tmp_path)]) == 5


def _write_cfg(tmp_path, cfg, name="c.ini"):
    p = tmp_path / name
    p.write_text(serialize_config(cfg))
    return str(p)


def test_invalid_initial_data_exit(tmp_path):
    cfg = small(steps=3).update("init", mean1=0.001, amplitude=0.01)
    assert main(["run", "--config", _write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 4


def test_failure_record(tmp_path):
    from binmix.output import write_failure
    from binmix.scheme import PositivityError
    cfg = small()
    s = make_initial(cfg.init, cfg.grid_spec(), cfg.params().model)
    exc = PositivityError("rho1 negative", where=(3, 4), value=-1e-3)
    write_failure(str(tmp_path), exc, s, 1)
    rec = json.loads((tmp_path / "failure.json").read_text())
    assert rec["error"] == "PositivityError" and rec["where"] == [3, 4]
    assert rec["last_good_step"] == 0 and rec["step"] == 1


def test_nonconvergence_exit(tmp_path):
    cfg = small(steps=2).update("solver", maxiter=1, rtol=1e-15, atol=1e-300)
    code = main(["run", "--config", _write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")])
    assert code == 3
    rec = json.loads((tmp_path / "o" / "failure.json").read_text())
    assert rec["error"] == "NonConvergenceError" and rec["report"]["iterations"] == 1
    assert (tmp_path / "o" / "snap_checkpoint" / "rho1.csv").exists()


def test_cli_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[grid]\nNq = 3\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["refine", "--config", _write_cfg(tmp_path, small()), "--axis", "time",
                 "--levels", "0.1,0.05"]) == 2
    assert main(["dispersion", "--config", _write_cfg(tmp_path, small()), "--kmin", "3",
                 "--kmax", "1"]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) in (2, 5)


def test_cli_run_ok(tmp_path, capsys):
    assert main(["run", "--config", _write_cfg(tmp_path, small(steps=2)),
                 "--out", str(tmp_path / "o")]) == 0
    assert "done: 2 steps" in capsys.readouterr().out


def test_dispersion_table(tmp_path):
    rows = dispersion_table(preset_config("fh-perturb"), 1.0, 60.0, 30)
    ks = [r["k"] for r in rows]
    assert ks == sorted(ks) and len(rows) == 30
    for r in rows:
        assert r["factor_root"] == pytest.approx(-0.01 * r["k"] ** 2)
        assert r["max_real"] == max(r[f"root{j}_re"] for j in range(4))
    p = tmp_path / "d.csv"
    assert main(["dispersion", "--config", _write_cfg(tmp_path, preset_config("fh-perturb")),
                 "--kmin", "1", "--kmax", "60", "--samples", "5", "--out", str(p)]) == 0
    assert p.read_text().splitlines()[0].startswith("k,max_real,factor_root")


def test_write_table_stdout(capsys):
    import sys
    write_table(sys.stdout, [{"a": 1, "b": 0.5}, {"a": 2, "b": float("nan")}])
    assert capsys.readouterr().out.splitlines() == ["a,b", "1,5.0000000000000000e-1", "2,nan"]


def test_refinement_harness_detects_first_order():
    cfg = small(n=8).update("time", steps=None, t_end=0.04)
    assert cfg.solver.rtol <= 1e-12
    rows2 = refinement_study(cfg, "time", [0.02, 0.01, 0.005, 0.0025])
    rows1 = refinement_study(cfg, "time", [0.02, 0.01, 0.005, 0.0025], order=1)
    assert rows2[-1]["order_rho1"] == pytest.approx(2.0, abs=0.3)
    assert rows1[-1]["order_rho1"] == pytest.approx(1.0, abs=0.3)
    with pytest.raises(ValueError):
        refinement_study(cfg, "time", [0.02, 0.015, 0.01])


# initial data ----------------------------------------------------------------------

def test_accuracy_initial_data():
    cfg = preset_config("accuracy")
    g = GridSpec(1.0, 1.0, 8, 8)
    s = make_initial(cfg.init, g, cfg.params().model)
    X, _ = g.mesh("cell")
    assert np.allclose(s.rho1[1:-1, 1:-1], 0.5 + 0.01 * np.cos(2 * np.pi * X[1:-1, 1:-1]))
    assert not s.u.any() and not s.v.any()


def test_star_indicator():
    X = np.array([1.0, 0.0, 0.3])
    Y = np.array([0.0, 1.0, 0.0])
    ind = star_indicator(X, Y, 1.0, 0.2, 8)
    assert ind[2] == 1.0


def test_from_file_initial(tmp_path):
    g = GridSpec(1.0, 1.0, 4, 3)
    r1 = np.full((3, 4), 0.25)
    write_csv_field(tmp_path / "rho1.csv", "rho1", r1, g)
    write_csv_field(tmp_path / "rho2.csv", "rho2", 1 - r1, g)
    cfg = RunConfig().update("init", preset="from-file", file=str(tmp_path))
    s = make_initial(cfg.init, g, cfg.params().model)
    assert np.array_equal(s.rho1[1:-1, 1:-1], r1)
    write_csv_field(tmp_path / "u.csv", "u", np.ones((2, 2)), g)
    with pytest.raises(ConfigError):
        make_initial(cfg.init, g, cfg.params().model)
