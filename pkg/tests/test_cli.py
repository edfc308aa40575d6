import json
import math

import numpy as np
import pytest

from cavityfield import fock
from cavityfield.cli import main, run_preset
from cavityfield.output import sidecar_path
from cavityfield.presets import PRESETS

FIG2A_MAX = (2.0666666666666664, 0.0, 0.23449386843084383)  # engine golden run


def _read_grid(path):
    return np.loadtxt(path, delimiter=",", skiprows=1)


def _sidecar(path):
    return json.loads(sidecar_path(path).read_text())


def test_fig2a_preset(tmp_path):
    (out,) = run_preset("fig2a", tmp_path)
    assert out.read_text().splitlines()[0] == "re,im,value"
    data = _read_grid(out)
    assert data.shape == (121 * 121, 3)
    ext = _sidecar(out)["extrema"]["max"]
    assert (ext["re"], ext["im"]) == FIG2A_MAX[:2]
    assert abs(ext["value"] - FIG2A_MAX[2]) < 1e-14
    assert abs(data[:, 2].max() - FIG2A_MAX[2]) < 1e-15


def test_fig3a_preset_nonnegative(tmp_path):
    (out,) = run_preset("fig3a", tmp_path)
    assert _read_grid(out)[:, 2].min() >= 0


def test_default_grid_noted(tmp_path):
    out = tmp_path / "q.csv"
    assert main(["qfunc", "--input", "coherent:1", "--out", str(out)]) == 0
    meta = _sidecar(out)
    assert meta["grid_defaulted"] is True and meta["grid_used"] == [-4, 4, -4, 4, 121, 121]
    assert meta["config"]["grid"] is None


def test_fig4a_min_negative_recorded(tmp_path):
    (out,) = run_preset("fig4a", tmp_path)
    meta = _sidecar(out)
    assert meta["extrema"]["min"]["value"] < 0
    assert meta["extrema"]["min"]["value"] == _read_grid(out)[:, 2].min()


def test_thermal_wigner_min_recorded(tmp_path):
    out = tmp_path / "w.csv"
    assert main(["wigner", "--input", "thermal:2", "--t1", "pi:2/3", "--t2", "pi:2/3",
                 "--grid=-3:3:-3:3:61:61", "--out", str(out)]) == 0
    recorded = _sidecar(out)["extrema"]["min"]["value"]
    assert recorded == _read_grid(out)[:, 2].min()


def test_vacuum_bypass(tmp_path):
    out = tmp_path / "w.csv"
    assert main(["wigner", "--input", "vacuum", "--no-atoms", "--grid=-1:1:-1:1:3:3",
                 "--out", str(out)]) == 0
    data = _read_grid(out)
    center = data[(data[:, 0] == 0) & (data[:, 1] == 0)][0, 2]
    assert abs(center - 2 / math.pi) < 1e-10


@pytest.mark.parametrize("command", ["qfunc", "wigner"])
def test_workers_byte_identical(tmp_path, command):
    texts = []
    for workers in (1, 4, 8):
        out = tmp_path / f"{command}_{workers}.csv"
        assert main([command, "--grid=-3:3:-3:3:41:37", "--workers", str(workers),
                     "--out", str(out)]) == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1] == texts[2]


@pytest.mark.parametrize("argv", [
    ["qfunc", "--input", "thermal:1.5", "--t1", "0.7", "--t2", "pi:1/3", "--grid=-2:2:-2:2:9:9",
     "--normalization", "renorm", "--cutoff", "auto:1e-10:3"],
    ["wigner", "--input", "coherent:1+0.5j", "--g1", "1", "--g2", "1.5", "--delta", "0.5",
     "--grid=-2:2:-2:2:9:7", "--cutoff", "fixed:30"],
    ["wigner", "--input", "coherent:1", "--delta1", "0.5", "--delta2", "-0.5", "--grid=-2:2:-2:2:5:5"],
    ["sweep", "--input", "coherent:1", "--range", "0.2:pi:1/2", "--step", "0.25"],
    ["sweep", "--param", "nbar", "--range", "0.5:2", "--step", "0.5", "--format", "json"],
])
def test_sidecar_round_trip(tmp_path, argv):
    out = tmp_path / "first.out"
    assert main(argv + ["--out", str(out)]) == 0
    again = tmp_path / "again.out"
    assert main(["rerun", str(sidecar_path(out)), "--out", str(again)]) == 0
    assert out.read_bytes() == again.read_bytes()


def test_sweep_columns_and_nan_rows(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--input", "fock:1", "--range", "0:pi:1", "--step", "pi:1/4",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "sweep_value,mandel_q_faithful,mandel_q_renorm,s_opt_faithful,s_opt_renorm,trace"
    assert lines[1].split(",")[1:] == ["nan"] * 5  # gt = 0: post-selection impossible
    assert _sidecar(out)["warning_count"] >= 1


def test_contour_preset_long_format(tmp_path, monkeypatch):
    monkeypatch.setitem(PRESETS, "fig6b", dict(PRESETS["fig6b"], values=[0.5, 1.0], stop=0.5))
    (out,) = run_preset("fig6b", tmp_path)
    lines = out.read_text().splitlines()
    assert lines[0] == "nbar,gt,s_opt_faithful,s_opt_renorm,s_opt_printed"
    assert len(lines) == 1 + 2 * 10


def test_exit_codes(tmp_path, capsys):
    assert main(["sweep", "--range", "1:1", "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["qfunc", "--input", "squeezed:1"]) == 2
    assert main(["qfunc", "--t1", "pi:x"]) == 2
    assert main(["qfunc", "--cutoff", "fixed:-3"]) == 2
    capsys.readouterr()
    assert main(["qfunc", "--input", "vacuum", "--out", str(tmp_path / "v.csv")]) == 3
    assert "t1" in capsys.readouterr().err
    assert main(["qfunc", "--t1", "0", "--out", str(tmp_path / "v.csv")]) == 3
    assert main(["qfunc", "--grid=-1:1:-1:1:3:3", "--out", str(tmp_path / "no" / "dir.csv")]) == 4
    with pytest.raises(SystemExit) as exc:
        main(["qfunc", "--normalization", "other"])
    assert exc.value.code == 2


def test_preset_fidelity():
    pi = "pi:"
    assert [PRESETS[f"fig2{k}"]["t1"] for k in "abcd"] == [pi + "1/6", pi + "1", pi + "7/6", pi + "2"]
    assert all(PRESETS[f"fig2{k}"]["input"] == "coherent:2" for k in "abcd")
    assert PRESETS["fig3a"]["input"] == "thermal:2" and PRESETS["fig3b"]["input"] == "thermal:12"
    assert all(PRESETS[f"fig3{k}"]["t1"] == PRESETS[f"fig3{k}"]["t2"] == "pi:2/3" for k in "ab")
    pairs = [(PRESETS[f"fig4{k}"]["t1"], PRESETS[f"fig4{k}"]["t2"]) for k in "abcd"]
    assert pairs == [("pi:1/2", "pi:3/2"), ("pi:1/2", "pi:5/2"), ("pi:3/2", "pi:7/2"), ("pi:5/2", "pi:7/2")]
    assert PRESETS["fig5a"]["inputs"] == ["coherent:1", "coherent:2", "coherent:3"]
    assert PRESETS["fig5b"]["inputs"] == ["thermal:1", "thermal:2", "thermal:3"]
    assert PRESETS["fig6a"]["parameter"] == "alpha0" and PRESETS["fig6b"]["parameter"] == "nbar"


def test_validate_fast_passes(tmp_path):
    report = tmp_path / "report.json"
    assert main(["validate", "--level", "fast", "--out", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["passed"] and data["elapsed_s"] < 30
    names = {d["name"] for d in data["discrepancies"]}
    assert {"q_coh", "w_coh", "q_thm", "w_thm", "moment_sum_adag", "moment_sum_adag2"} <= names


def test_validate_detects_broken_partial_trace(monkeypatch):
    real = fock.partial_trace

    def broken(joint, subsystem_dims=None, keep="field"):
        rho = real(joint, subsystem_dims, keep)
        return rho.scaled(1.01)

    monkeypatch.setattr(fock, "partial_trace", broken)
    assert main(["validate", "--level", "fast"]) != 0
