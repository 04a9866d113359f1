import csv

import pytest

from qprecode.cli import main

SMALL = ["--profile", "fast", "--m_h", "1", "--m_v", "2", "--K", "2", "--L", "4",
         "--num_drops", "2", "--iterations", "3"]


def test_sweep(tmp_path, capsys):
    assert main(["sweep", *SMALL, "--snr_db", "0,20", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert len(rows) == 10
    assert (tmp_path / "sweep.svg").exists() and (tmp_path / "run_meta.json").exists()
    assert "wrote" in capsys.readouterr().out


def test_sweep_config_file(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[system]\nm_h = 1\nm_v = 2\nK = 1\nL = 2\n[sweep]\nsnr_db = 5\nnum_drops = 1\n"
                   "[run]\nschemes = unaware\n[output]\nemit_plot = false\n"
                   f"directory = {tmp_path / 'out'}\n")
    assert main(["sweep", "--config", str(ini)]) == 0
    assert (tmp_path / "out" / "sweep.csv").exists()
    assert not (tmp_path / "out" / "sweep.svg").exists()


def test_converge(tmp_path):
    assert main(["converge", *SMALL, "--snr", "10", "--drop-seed", "1", "--oracle",
                 "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "converge.csv").open()))
    assert len(rows) == 4 and "oracle_objective" in rows[0]


def test_bad_config_exit_code(tmp_path, capsys):
    assert main(["sweep", *SMALL, "--schemes", "magic", "--out", str(tmp_path)]) == 2
    assert "unknown scheme" in capsys.readouterr().err


def test_selftest(capsys):
    assert main(["selftest", "--seed", "3"]) == 0
    assert capsys.readouterr().out.count("PASS") == 3


def test_requires_command():
    with pytest.raises(SystemExit):
        main([])
