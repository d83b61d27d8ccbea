import csv
import json

import numpy as np
import pytest

from fdmsnn.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, bode_response, main
from fdmsnn.config import ExperimentConfig


def rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_usage_errors(tmp_path, capsys):
    assert main([]) == EXIT_USAGE
    assert main(["nope"]) == EXIT_USAGE
    assert main(["bode", "--set", "hpf.bogus=1", "--out", str(tmp_path)]) == EXIT_USAGE
    assert "hpf.bogus" in capsys.readouterr().err
    assert main(["bode", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert main(["validate-1x1", "--set", "validation.n_events=0", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["quadratic-study", "--set", "quadratic.amplitudes=[0.5]", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["quadratic-study", "--engine", "circuit", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["train-iris", "--set", "training.dataset=\"/no/such.csv\"", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["--help"]) == EXIT_OK


def test_bode(tmp_path):
    out = tmp_path / "bode"
    assert main(["bode", "--out", str(out)]) == EXIT_OK
    r = rows(out / "bode.csv")
    assert r[0] == ["omega_rad_s", "mag_analytic", "mag_simulated"]
    assert float(r[1][0]) == 0.0 and float(r[1][1]) == 0.0
    assert abs(float(r[1][2])) < 1e-12
    assert json.loads((out / "config.json").read_text())["hpf"]["order"] == 8


def test_bode_columns_agree():
    omega, analytic, sim = bode_response(ExperimentConfig())
    ac = omega > 0
    assert np.all(np.abs(sim[ac] - analytic[ac]) <= 0.02 * analytic[ac])
    assert omega[1] == pytest.approx(2 * np.pi * 10) and omega[-1] == pytest.approx(2 * np.pi * 1e6)


def test_validate_1x1_and_negative_controls(tmp_path, capsys):
    out = tmp_path / "v"
    assert main(["validate-1x1", "--out", str(out)]) == EXIT_OK
    for name in ("read_error_hist.csv", "stdp_curve.csv", "read_errors.csv", "spikes.csv", "config.json"):
        assert (out / name).is_file()
    assert rows(out / "stdp_curve.csv")[0] == ["delta_t_s", "dG_circuit", "dG_eq4"]
    assert len(rows(out / "stdp_curve.csv")) == 11
    assert main(["validate-1x1", "--out", str(tmp_path / "o1"), "--set", "hpf.order=1"]) == EXIT_FAIL
    assert main(["validate-1x1", "--out", str(tmp_path / "by"), "--set", "hpf.bypass=true"]) == EXIT_FAIL
    assert "read-error: FAIL" in capsys.readouterr().out


def test_stdp_curve(tmp_path):
    assert main(["stdp-curve", "--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "summary.json").read_text())["stdp_mae"] <= 0.05


def test_config_echo_rerun_is_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["train-iris", "--epochs", "2", "--seed", "4", "--out", str(a)]) in (EXIT_OK, EXIT_FAIL)
    echo = json.loads((a / "config.json").read_text())
    assert echo["epochs"] == 2 and echo["seed"] == 4
    assert main(["train-iris", "--config", str(a / "config.json"), "--out", str(b)]) in (EXIT_OK, EXIT_FAIL)
    for name in ("accuracy.csv", "weights_final.csv", "weights_initial.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_train_iris_reference_and_eval_only(tmp_path):
    out = tmp_path / "t"
    assert main(["train-iris", "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["epochs"] == 20 and rep["peak_accuracy"] >= 94.0
    assert len(rows(out / "accuracy.csv")) == 22
    assert np.loadtxt(out / "weights_final.csv", delimiter=",").shape == (16, 3)
    assert (out / "weights" / "epoch_020.csv").is_file()
    zero = tmp_path / "z"
    assert main(["train-iris", "--epochs", "0", "--out", str(zero)]) == EXIT_OK
    acc = json.loads((zero / "report.json").read_text())["accuracy"]
    assert len(acc) == 1


def test_fast_profile_sets_epochs(tmp_path):
    out = tmp_path / "f"
    main(["train-iris", "--fast", "--out", str(out)])
    assert json.loads((out / "config.json").read_text())["epochs"] == 5
    out2 = tmp_path / "g"
    main(["train-iris", "--fast", "--epochs", "1", "--out", str(out2)])
    assert json.loads((out2 / "config.json").read_text())["epochs"] == 1


def test_quadratic_single_amplitude(tmp_path):
    out = tmp_path / "q"
    code = main(["quadratic-study", "--epochs", "1", "--set", "quadratic.amplitudes=[0.3]", "--out", str(out)])
    assert code in (EXIT_OK, EXIT_FAIL)
    table = rows(out / "quadratic_summary.csv")
    assert len(table) == 2 and float(table[1][0]) == 0.3
    hist = rows(out / "qpoint_hist.csv")
    assert hist[0] == ["vbias_lo", "vbias_hi", "count"]
    centres = [0.5 * (float(r[0]) + float(r[1])) for r in hist[1:]]
    assert min(abs(c) for c in centres) < 1e-12  # a bin is centred on 0 V
    assert (out / "A_0.3" / "accuracy.csv").is_file()
