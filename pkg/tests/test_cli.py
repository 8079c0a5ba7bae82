import json
from pathlib import Path

import pytest

from adaptvs.cli import main

REPO = Path(__file__).resolve().parents[1]
ONE_BEND = str(REPO / "scenarios" / "one_bend.yaml")


def write_scenario(tmp_path, text):
    p = tmp_path / "scn.yaml"
    p.write_text(text)
    return str(p)


class TestValidate:
    def test_good_file(self, capsys):
        assert main(["validate", ONE_BEND]) == 0
        assert "ok:" in capsys.readouterr().out

    def test_bad_file(self, tmp_path, capsys):
        p = write_scenario(tmp_path, "schema: 1\nestimator:\n  alpa: 1\n")
        assert main(["validate", p]) == 2
        assert "estimator.alpa" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "none.yaml")]) == 2


class TestRun:
    def test_writes_csv_and_sidecar(self, tmp_path, capsys):
        scn = write_scenario(
            tmp_path, "schema: 1\nenvironment: no_bend\nduration_steps: 40\n"
        )
        assert main(["run", scn, "-o", str(tmp_path / "out")]) == 0
        csvs = list((tmp_path / "out").glob("*.csv"))
        assert len(csvs) == 1
        assert Path(str(csvs[0]) + ".meta.json").exists()
        assert "no_bend" in capsys.readouterr().out

    def test_out_dir_from_environment(self, tmp_path, monkeypatch):
        scn = write_scenario(tmp_path, "schema: 1\nduration_steps: 30\n")
        monkeypatch.setenv("ADAPTVS_OUT_DIR", str(tmp_path / "envout"))
        assert main(["run", scn]) == 0
        assert list((tmp_path / "envout").glob("*.csv"))

    def test_seed_override_lands_in_metadata(self, tmp_path):
        scn = write_scenario(tmp_path, "schema: 1\nduration_steps: 30\nseed: 1\n")
        assert main(["run", scn, "--seed", "42", "-o", str(tmp_path / "o")]) == 0
        meta = json.loads(next((tmp_path / "o").glob("*.meta.json")).read_text())
        assert meta["seed"] == 42

    def test_flow_override_lk(self, tmp_path):
        scn = write_scenario(
            tmp_path,
            "schema: 1\nduration_steps: 8\nfeatures:\n  count: 4\n",
        )
        assert main(["run", scn, "--flow", "lk", "-o", str(tmp_path / "o")]) == 0


class TestSweep:
    def test_small_sweep_outputs(self, tmp_path):
        out = tmp_path / "out"
        assert (
            main(
                [
                    "sweep",
                    str(REPO / "scenarios" / "default_sweep.yaml"),
                    "--envs",
                    "no_bend",
                    "--alphas",
                    "0.95",
                    "0.75",
                    "-o",
                    str(out),
                ]
            )
            == 0
        )
        assert (out / "summary.csv").exists()
        assert (out / "no_bend.svg").exists()
        assert len(list(out.glob("no_bend_alpha*.csv"))) == 2

    def test_trial_failure_yields_nonzero_exit(self, tmp_path, capsys):
        # features cannot be placed, so every trial fails to execute
        scn = write_scenario(
            tmp_path,
            "schema: 1\nduration_steps: 20\nfeatures:\n  count: 40\n  min_separation_px: 400\n",
        )
        assert main(["sweep", scn, "--envs", "no_bend", "--alphas", "0.95", "-o", str(tmp_path / "o")]) == 1
        assert "FAILED" in capsys.readouterr().err


class TestPlot:
    def test_plot_from_exported_csv(self, tmp_path):
        scn = write_scenario(tmp_path, "schema: 1\nduration_steps: 40\n")
        assert main(["run", scn, "-o", str(tmp_path / "o")]) == 0
        csv = next((tmp_path / "o").glob("*.csv"))
        svg = tmp_path / "cmp.svg"
        assert main(["plot", str(csv), "-o", str(svg)]) == 0
        assert svg.stat().st_size > 0

    def test_plot_missing_csv(self, tmp_path):
        assert main(["plot", str(tmp_path / "none.csv"), "-o", str(tmp_path / "x.svg")]) == 1


class TestTeleopArgs:
    def test_bad_bind_rejected_before_serving(self):
        assert main(["teleop", ONE_BEND, "--bind", "nonsense"]) == 2


class TestUsage:
    def test_no_command_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_empty_alphas_rejected_by_parser(self):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", ONE_BEND, "--alphas"])
        assert exc.value.code == 2
