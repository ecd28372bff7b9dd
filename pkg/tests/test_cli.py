# tests/test_cli.py
import json
import logging

import numpy as np

from qssmix.harness.cli import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, build_parser, main
from qssmix.harness.report import Job, check
from qssmix.harness.suites import SUITES


def test_parser_knows_every_suite():
    parser = build_parser()
    assert parser.parse_args(["scaling", "--n-max", "2"]).n_max == 2
    assert set(SUITES) == {"geometry-check", "build-family", "scaling", "dissipate",
                           "stability-sweep", "embed", "report"}


def test_print_config(capsys):
    assert main(["--print-config", "--seed", "9"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "epsilons = 0.1, 0.01, 0.001, 0.0001" in out
    assert "seed = 9" in out
    assert "supersample = 8" in out
    assert "tol_norm = 0.0001" in out


def test_empty_value_is_a_configuration_error(tmp_path, caplog):
    path = tmp_path / "lab.cfg"
    path.write_text("epsilons =\n")
    with caplog.at_level(logging.ERROR):
        assert main(["--config", str(path), "--print-config"]) == EXIT_CONFIG
    assert "epsilons" in caplog.text


def test_missing_config_and_bad_seed(tmp_path):
    assert main(["--config", str(tmp_path / "none.cfg"), "--print-config"]) == EXIT_CONFIG
    assert main(["--seed=-1", "--print-config"]) == EXIT_CONFIG


def test_no_command():
    assert main([]) == EXIT_CONFIG


def test_report_exit_codes(tmp_path):
    assert main(["report", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "summary.json").is_file()
    with Job("failing") as job:
        check("broken", False, 0.0)
    job.export(tmp_path / "failing")
    assert main(["report", "--out", str(tmp_path)]) == EXIT_CHECK_FAILED


def test_geometry_check_on_circles(tmp_path):
    path = tmp_path / "lab.cfg"
    path.write_text("family = circle\n")
    assert main(["--config", str(path), "--out", str(tmp_path), "geometry-check"]) == EXIT_OK
    data = json.loads((tmp_path / "geometry-check" / "geometry-check.json").read_text())
    assert data["passed"]
    assert data["failures"] == []
    checks = [e for e in data["entries"] if e["kind"] == "check"]
    assert len(checks) == 9
    assert all(e["passed"] for e in checks)


def test_runs_leave_the_global_random_state_alone(tmp_path):
    before = np.random.get_state()[1].copy()
    assert main(["report", "--out", str(tmp_path), "--seed", "3"]) == EXIT_OK
    assert np.array_equal(np.random.get_state()[1], before)
