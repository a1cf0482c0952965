import json
import math
import subprocess
import sys

import pytest

from qcap.channels import depolarizing, identity_channel, save_channel
from qcap.cli import _fmt, main, run_custom, run_fig1, run_fig2, run_fig3
from qcap.depolarizing_lp import lp_f, lp_g_hat_iterate
from qcap.oneshot import bound_g


def test_fmt_full_precision():
    assert _fmt(0.1) == "0.10000000000000001"
    assert _fmt(3) == "3"
    assert _fmt("optimal") == "optimal"


def test_fig1_rows_are_ordered():
    rows = run_fig1(r_min=0.085, r_max=0.09, steps=2, eps=0.01, jobs=1)
    assert [row[0] for row in rows] == [0.085, 0.09]
    for r, neg_f, neg_g, neg_gt, status in rows:
        assert status == "optimal"
        # tighter relaxations certify lower rates
        assert neg_gt <= neg_g + 1e-7
        assert neg_g <= neg_f + 1e-7


def test_fig1_grid_validation():
    with pytest.raises(ValueError):
        run_fig1(r_min=0.5, r_max=0.2)
    with pytest.raises(ValueError):
        run_fig1(steps=1)


def test_fig2_rows_match_library_calls():
    rows = run_fig2(n_max=3, jobs=1)
    assert [row[0] for row in rows] == [1, 2, 3]
    for n, neg_f, neg_gh, status in rows:
        assert status == "optimal"
        assert neg_f == lp_f(n, 0.2, 0.004).log_value
        assert neg_gh == lp_g_hat_iterate(n, 0.2, 0.004, 5)[-1].log_value


def test_fig2_validation():
    with pytest.raises(ValueError):
        run_fig2(n_max=0)


def test_fig3_rows():
    rows = run_fig3(steps=3, jobs=1)
    assert [row[0] for row in rows] == [0.0, 0.25, 0.5]
    for r, qg, qt, status in rows:
        assert status == "optimal"
        assert qg <= qt + 1e-6
    with pytest.raises(ValueError):
        run_fig3(steps=1)


def test_custom_single_point():
    rows = run_custom("depol", ["g"], 0.1, 0.1, 1, eps=0.05, jobs=1)
    assert len(rows) == 1
    r, neg_g, status = rows[0]
    assert r == 0.1
    assert status == "optimal"
    assert abs(neg_g - bound_g(depolarizing(0.1), 0.05).log_value) < 1e-12


def test_custom_validation():
    with pytest.raises(ValueError):
        run_custom("nope", ["g"], 0.0, 1.0, 2)
    with pytest.raises(ValueError):
        run_custom("ad", ["nope"], 0.0, 1.0, 2)
    with pytest.raises(ValueError):
        run_custom("ad", [], 0.0, 1.0, 2)
    with pytest.raises(ValueError):
        run_custom("ad", ["g"], 1.0, 0.0, 2)


def test_pool_matches_serial():
    assert run_fig2(n_max=4, jobs=2) == run_fig2(n_max=4, jobs=1)
    with pytest.raises(ValueError):
        run_fig2(n_max=2, jobs=0)


def test_main_requires_a_mode(capsys):
    assert main([]) == 2
    assert "choose" in capsys.readouterr().err


def test_main_rejects_unknown_bound_flag(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["--channel", "x.json", "--bound", "nope"])
    assert exc.value.code == 2


def test_main_eval_identity(tmp_path, capsys):
    path = str(tmp_path / "id.json")
    save_channel(identity_channel(2), path)
    assert main(["--channel", path, "--bound", "q_gamma"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] == "optimal"
    assert abs(payload["log_value"] - 1.0) < 1e-6


def test_main_eval_iterated_bound(tmp_path, capsys):
    path = str(tmp_path / "id.json")
    save_channel(identity_channel(2), path)
    assert main(["--channel", path, "--bound", "g_hat", "--rounds", "2", "--eps", "0.01"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] == "optimal"
    assert abs(payload["value"] - 0.495) < 1e-6


def test_main_eval_input_errors(tmp_path, capsys):
    path = str(tmp_path / "id.json")
    save_channel(identity_channel(2), path)
    assert main(["--channel", path]) == 2
    assert main(["--channel", path, "--bound", "f", "--bound", "g"]) == 2
    assert main(["--channel", str(tmp_path / "missing.json"), "--bound", "f"]) == 2
    capsys.readouterr()


def test_main_config_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({"experiment": "fig2_depol", "n_max": 2, "eps": 0.05}))
    out = tmp_path / "rows.csv"
    assert main(["--config", str(cfg), "--n-max", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,neg_log_f,neg_log_g_hat,status"
    assert len(lines) == 2
    cells = lines[1].split(",")
    assert cells[0] == "1"
    # the config eps survives the n_max override
    assert math.isclose(float(cells[1]), lp_f(1, 0.2, 0.05).log_value, rel_tol=0, abs_tol=0)
    capsys.readouterr()


def test_main_config_rejections(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"experiment": "fig2_depol", "bogus": 1}))
    assert main(["--config", str(bad)]) == 2
    assert "unknown config fields" in capsys.readouterr().err
    notdict = tmp_path / "list.json"
    notdict.write_text("[1, 2]")
    assert main(["--config", str(notdict)]) == 2
    assert main(["--config", str(tmp_path / "absent.json")]) == 2
    capsys.readouterr()


def test_main_custom_needs_grid(capsys):
    assert main(["--experiment", "custom", "--family", "ad", "--bound", "g"]) == 2
    assert "r-min" in capsys.readouterr().err


def test_cli_subprocess_deterministic(tmp_path):
    cmd = [sys.executable, "-m", "qcap.cli", "--experiment", "fig2_depol", "--n-max", "5"]
    first = subprocess.run(cmd, capture_output=True, text=True)
    second = subprocess.run(cmd, capture_output=True, text=True)
    assert first.returncode == 0
    assert first.stdout == second.stdout
    assert first.stdout.startswith("n,neg_log_f,neg_log_g_hat,status\n")
    assert first.stdout.endswith("\n")
    assert len(first.stdout.splitlines()) == 6
