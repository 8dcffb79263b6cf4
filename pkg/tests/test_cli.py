import json

import pytest

from cooproute import SolverError
from cooproute import cli


def run(capsys, *argv):
    rc = cli.main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


GAME_DOC = {
    "nodes": [1, 2],
    "links": [
        {"id": "l1", "source": 1, "target": 2,
         "cost": {"kind": "linear", "slope": 1.0}},
        {"id": "l2", "source": 1, "target": 2,
         "cost": {"kind": "linear", "slope": 0.0, "intercept": 0.5}},
    ],
    "users": [
        {"id": 1, "source": 1, "target": 2, "demand": 1.0},
        {"id": 2, "source": 1, "target": 2, "demand": 1.0},
    ],
    "alphas": [0.0, 0.0],
}

MIXED_DOC = {"capacity_one": 4.0, "capacity_two": 3.0,
             "group_demand": 1.2, "mass_demand": 1.0, "alpha": 0.9}


def write_doc(tmp_path, doc, name="doc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestPresetsCommand:
    def test_lists_everything_with_variant_labels(self, capsys):
        rc, out, err = run(capsys, "presets")
        assert rc == 0
        lines = out.strip().splitlines()
        assert len(lines) == 10
        assert sum("(variant)" in line for line in lines) == 2


class TestSolveCommand:
    def test_preset_csv_shape(self, capsys):
        rc, out, err = run(capsys, "solve", "--preset", "exp2",
                           "--alpha", "0")
        assert rc == 0
        lines = out.strip().splitlines()
        assert lines[0] == ("param,cluster,basin_count,J_1,J_2,"
                            "Jhat_1,Jhat_2,f_1_l1,f_1_l2,f_2_l1,f_2_l2")
        assert len(lines) == 2
        cells = lines[1].split(",")
        assert cells[0] == ""
        assert float(cells[7]) == pytest.approx(1 / 6, abs=1e-6)

    def test_output_is_deterministic(self, capsys):
        rc1, out1, _ = run(capsys, "solve", "--preset", "exp1",
                           "--alpha", "0.95", "0")
        rc2, out2, _ = run(capsys, "solve", "--preset", "exp1",
                           "--alpha", "0.95", "0")
        assert rc1 == rc2 == 0
        assert out1 == out2

    def test_document_matches_inline_instance(self, capsys, tmp_path):
        rc, out, err = run(capsys, "solve", "--config",
                           write_doc(tmp_path, GAME_DOC))
        assert rc == 0
        row = out.strip().splitlines()[1].split(",")
        # both users put a sixth of their demand on the congestible link
        assert float(row[7]) == pytest.approx(1 / 6, abs=1e-6)

    def test_out_and_manifest_files(self, capsys, tmp_path):
        out_file = tmp_path / "r.csv"
        man_file = tmp_path / "m.json"
        rc, out, err = run(capsys, "solve", "--preset", "exp1",
                           "--out", str(out_file),
                           "--manifest", str(man_file))
        assert rc == 0
        assert out == ""
        assert out_file.read_text().startswith("param,cluster")
        manifest = json.loads(man_file.read_text())
        assert manifest["tool"].startswith("cooproute ")
        assert manifest["preset"] == "exp1"
        assert any(w.startswith("assumed:") for w in manifest["warnings"])
        assert "solve" in manifest["timings"]

    def test_manifest_lands_on_stderr_by_default(self, capsys):
        rc, out, err = run(capsys, "solve", "--preset", "exp2",
                           "--alpha", "0")
        assert rc == 0
        manifest = json.loads(err)
        assert manifest["command"] == "solve"

    def test_solver_config_override(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"grid_density": 5}))
        rc, out, err = run(capsys, "solve", "--preset", "exp2",
                           "--alpha", "0", "--solver-config", str(cfg))
        assert rc == 0
        assert json.loads(err)["resolved_config"]["grid_density"] == 5


class TestErrorPaths:
    def test_unknown_preset(self, capsys):
        rc, out, err = run(capsys, "solve", "--preset", "nope")
        assert rc == 2
        assert "error:" in err

    def test_unknown_document_key(self, capsys, tmp_path):
        doc = dict(GAME_DOC)
        doc["extra"] = 1
        rc, out, err = run(capsys, "solve", "--config",
                           write_doc(tmp_path, doc))
        assert rc == 2
        assert "extra" in err

    def test_duplicate_json_key(self, capsys, tmp_path):
        path = tmp_path / "dup.json"
        path.write_text('{"capacity_one": 4, "capacity_one": 5, '
                        '"capacity_two": 3, "group_demand": 1, '
                        '"mass_demand": 1, "alpha": 0.5}')
        rc, out, err = run(capsys, "mixed", "--config", str(path))
        assert rc == 2
        assert "duplicate" in err

    def test_both_weight_forms_rejected(self, capsys, tmp_path):
        doc = dict(GAME_DOC)
        doc["cooperation"] = [[1.0, 0.0], [0.0, 1.0]]
        rc, out, err = run(capsys, "solve", "--config",
                           write_doc(tmp_path, doc))
        assert rc == 2

    def test_bad_cost_kind(self, capsys, tmp_path):
        doc = json.loads(json.dumps(GAME_DOC))
        doc["links"][0]["cost"] = {"kind": "cubic", "slope": 1.0}
        rc, out, err = run(capsys, "solve", "--config",
                           write_doc(tmp_path, doc))
        assert rc == 2

    def test_mixed_document_needs_mixed_command(self, capsys, tmp_path):
        rc, out, err = run(capsys, "solve", "--config",
                           write_doc(tmp_path, MIXED_DOC))
        assert rc == 2
        assert "mixed" in err

    def test_infeasible_preset(self, capsys):
        rc, out, err = run(capsys, "solve", "--preset", "exp4")
        assert rc == 3
        assert "infeasible" in err

    def test_solver_failure_maps_to_four(self, capsys, monkeypatch):
        def boom(game, config=None):
            raise SolverError("no fixed point", diagnostics={"starts": 0})

        monkeypatch.setattr(cli, "multistart_nash", boom)
        rc, out, err = run(capsys, "solve", "--preset", "exp2")
        assert rc == 4
        assert "solver failure" in err

    def test_bad_thread_cap(self, capsys, monkeypatch):
        monkeypatch.setenv("COOPROUTE_THREADS", "many")
        rc, out, err = run(capsys, "sweep", "--preset", "exp2",
                           "--alphas", "0,0.1")
        assert rc == 2

    def test_no_arguments_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main([])
        assert exc.value.code == 2


class TestSweepCommand:
    def test_alpha_grid_rows(self, capsys):
        rc, out, err = run(capsys, "sweep", "--preset", "exp2",
                           "--alphas", "0,0.2,0.4")
        assert rc == 0
        lines = out.strip().splitlines()
        params = [line.split(",")[0] for line in lines[1:]]
        assert params == ["0", "0.2", "0.4"]

    def test_range_syntax(self, capsys):
        rc, out, err = run(capsys, "sweep", "--preset", "exp2",
                           "--alphas", "0:0.4:0.2")
        assert rc == 0
        assert json.loads(err)["parameters"]["values"] == [0.0, 0.2, 0.4]

    def test_structural_sweep_with_values(self, capsys):
        rc, out, err = run(capsys, "sweep", "--preset", "exp5",
                           "--parameter", "--values", "0,40")
        assert rc == 0
        assert json.loads(err)["parameters"]["parameter"] == "cross_slope"
        lines = out.strip().splitlines()
        assert {line.split(",")[0] for line in lines[1:]} == {"0", "40"}

    def test_structural_sweep_needs_preset_parameter(self, capsys):
        rc, out, err = run(capsys, "sweep", "--preset", "exp1",
                           "--parameter")
        assert rc == 2

    def test_worker_pool_matches_sequential(self, capsys, monkeypatch):
        rc, seq, _ = run(capsys, "sweep", "--preset", "exp2",
                         "--alphas", "0,0.2")
        monkeypatch.setenv("COOPROUTE_THREADS", "2")
        rc2, par, _ = run(capsys, "sweep", "--preset", "exp2",
                          "--alphas", "0,0.2")
        assert rc == rc2 == 0
        assert seq == par


class TestMixedCommand:
    def test_document_run(self, capsys, tmp_path):
        rc, out, err = run(capsys, "mixed", "--config",
                           write_doc(tmp_path, MIXED_DOC))
        assert rc == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("solver,case,kind,group_split")
        solvers = {line.split(",")[0] for line in lines[1:]}
        assert solvers == {"closed-form", "numeric"}

    def test_alpha_override(self, capsys, tmp_path):
        rc, out, err = run(capsys, "mixed", "--config",
                           write_doc(tmp_path, MIXED_DOC),
                           "--alpha", "0")
        assert rc == 0
        rows = [line.split(",") for line in out.strip().splitlines()[1:]]
        numeric = [r for r in rows if r[0] == "numeric"]
        assert len(numeric) == 1
        assert float(numeric[0][3]) == pytest.approx(0.6, abs=1e-6)

    def test_game_preset_rejected(self, capsys):
        rc, out, err = run(capsys, "mixed", "--preset", "exp1")
        assert rc == 2


class TestVerifyCommand:
    def test_equilibrium_passes(self, capsys, tmp_path):
        prof = tmp_path / "prof.json"
        prof.write_text(json.dumps(
            {"path_flows": [[1.0, 0.0], [0.875, 0.125]]}))
        rc, out, err = run(capsys, "verify", "--preset", "exp1",
                           "--alpha", "0.95", "0",
                           "--profile", str(prof))
        assert rc == 0
        result = json.loads(out)
        assert result["ok"] is True
        assert result["max_violation"] <= 1e-6

    def test_non_equilibrium_reports_false(self, capsys, tmp_path):
        prof = tmp_path / "prof.json"
        prof.write_text(json.dumps(
            {"path_flows": [[0.5, 0.5], [0.5, 0.5]]}))
        rc, out, err = run(capsys, "verify", "--preset", "exp1",
                           "--alpha", "0", "--profile", str(prof))
        assert rc == 0
        assert json.loads(out)["ok"] is False

    def test_demand_mismatch_is_config_error(self, capsys, tmp_path):
        prof = tmp_path / "prof.json"
        prof.write_text(json.dumps(
            {"path_flows": [[0.5, 0.2], [0.5, 0.5]]}))
        rc, out, err = run(capsys, "verify", "--preset", "exp1",
                           "--alpha", "0", "--profile", str(prof))
        assert rc == 2
