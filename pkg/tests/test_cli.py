"""Command-line surface: exit codes, artifacts, manifests, determinism."""

import json
import os

import numpy as np
import pytest

from pedflow.cli import main
from pedflow.csvio import read_density_csv

FAST_CA = ["--mc-runs", "2", "--t-end", "1", "--snapshots", "0.5,1"]


def run_cli(*argv):
    return main(list(argv))


def read_manifest(outdir):
    with open(os.path.join(outdir, "manifest.json")) as fh:
        return json.load(fh)


class TestExitCodes:
    def test_unknown_scenario_lists_builtins(self, tmp_path, capsys):
        code = run_cli("run", "meso", "unknown-name", "--outdir", str(tmp_path / "o"))
        assert code == 2
        err = capsys.readouterr().err
        assert "redlight-a2" in err and "nonhyp-a2" in err

    def test_hypmap_resolution_too_small(self, tmp_path):
        code = run_cli("hypmap", "--a", "2", "--resolution", "1", "--out", str(tmp_path / "m.csv"))
        assert code == 2

    def test_hypmap_invalid_velocities(self, tmp_path):
        code = run_cli(
            "hypmap", "--c0", "1", "--c1", "2", "--c2", "0.5", "--c3", "0.25",
            "--out", str(tmp_path / "m.csv"),
        )
        assert code == 2

    def test_hypmap_missing_velocities(self, tmp_path):
        assert run_cli("hypmap", "--out", str(tmp_path / "m.csv")) == 2

    def test_list_scenarios(self, capsys):
        assert run_cli("list-scenarios") == 0
        out = capsys.readouterr().out
        assert "redlight-a2" in out and "mixed-a3" in out


class TestRunArtifacts:
    def test_ca_run_writes_manifest_last(self, tmp_path):
        out = tmp_path / "ca"
        assert run_cli("run", "ca", "redlight-a2", "--outdir", str(out), *FAST_CA) == 0
        manifest = read_manifest(out)
        files = sorted(os.listdir(out))
        assert sorted(manifest["artifacts"] + ["manifest.json"]) == files
        assert manifest["tier"] == "ca"
        assert manifest["snapshot_times"] == [0.5, 1.0]
        assert len(manifest["artifacts"]) == 2

    def test_ca_csv_format(self, tmp_path):
        out = tmp_path / "ca"
        run_cli("run", "ca", "redlight-a2", "--outdir", str(out), *FAST_CA)
        path = out / "snap_000.csv"
        header = path.read_text().splitlines()[0]
        assert header == "k,x,rho_plus,rho_minus"
        plus, minus = read_density_csv(path)
        assert len(plus) == 1400
        assert plus.sum() == pytest.approx(40.0)  # packed block at t=0.5 s

    def test_meso_run(self, tmp_path):
        out = tmp_path / "meso"
        code = run_cli(
            "run", "meso", "redlight-a2", "--outdir", str(out), "--t-end", "1",
            "--snapshots", "1",
        )
        assert code == 0
        plus, minus = read_density_csv(out / "snap_000.csv")
        assert plus.sum() * 0.2 == pytest.approx(8.0, rel=1e-12)

    def test_pde_run_with_metadata(self, tmp_path):
        out = tmp_path / "pde"
        code = run_cli(
            "run", "pde", "redlight-a2", "--outdir", str(out), "--t-end", "2",
            "--snapshots", "1,2",
        )
        assert code == 0
        with open(out / "pde_meta.json") as fh:
            meta = json.load(fh)
        assert meta["grid"]["m"] == 350
        assert len(meta["snapshots"]) == 2
        for snap in meta["snapshots"]:
            assert set(snap) >= {"time", "min_plus", "max_plus", "tv_plus", "tv_minus"}

    def test_pde_eps_override_recorded(self, tmp_path):
        out = tmp_path / "pde"
        run_cli(
            "run", "pde", "nonhyp-a2", "--outdir", str(out), "--eps", "1.5",
            "--t-end", "1", "--snapshots", "1", "--dx", str(420 / 640),
        )
        manifest = read_manifest(out)
        assert manifest["scheme"]["eps"] == 1.5
        assert manifest["frame"]["cells"] == 640

    def test_scenario_json_input(self, tmp_path):
        from pedflow.scenarios import get_scenario, scenario_to_dict

        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(scenario_to_dict(get_scenario("redlight-a2"))))
        out = tmp_path / "run"
        assert run_cli("run", "ca", str(spec_path), "--outdir", str(out), *FAST_CA) == 0


class TestDeterminism:
    def test_ca_runs_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["run", "ca", "redlight-a2", "--seed", "7", "--mc-runs", "1", "--t-end", "1",
                "--snapshots", "1"]
        assert run_cli(*args, "--outdir", str(a)) == 0
        assert run_cli(*args, "--outdir", str(b)) == 0
        assert (a / "snap_000.csv").read_bytes() == (b / "snap_000.csv").read_bytes()

    def test_seed_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        base = ["run", "ca", "redlight-a2", "--mc-runs", "1", "--t-end", "1", "--snapshots", "1"]
        run_cli(*base, "--seed", "7", "--outdir", str(a))
        run_cli(*base, "--seed", "8", "--outdir", str(b))
        assert (a / "snap_000.csv").read_bytes() != (b / "snap_000.csv").read_bytes()


class TestCompareCommand:
    def test_pde_against_itself_is_zero(self, tmp_path):
        run_dir = tmp_path / "pde"
        run_cli("run", "pde", "redlight-a2", "--outdir", str(run_dir), "--t-end", "2",
                "--snapshots", "1,2")
        out = tmp_path / "cmp"
        assert run_cli("compare", str(run_dir), str(run_dir), "--outdir", str(out)) == 0
        lines = (out / "comparison.csv").read_text().splitlines()
        assert len(lines) == 5
        for line in lines[1:]:
            fields = line.split(",")
            assert float(fields[2]) == 0.0 and float(fields[3]) == 0.0

    def test_ca_vs_pde_smoke(self, tmp_path):
        ca_dir, pde_dir, out = tmp_path / "ca", tmp_path / "pde", tmp_path / "cmp"
        run_cli("run", "ca", "redlight-a2", "--outdir", str(ca_dir), "--mc-runs", "3",
                "--t-end", "2", "--snapshots", "1,2")
        run_cli("run", "pde", "redlight-a2", "--outdir", str(pde_dir), "--t-end", "2",
                "--snapshots", "1,2")
        assert run_cli("compare", str(ca_dir), str(pde_dir), "--outdir", str(out)) == 0
        text = (out / "comparison.csv").read_text()
        assert "nan" not in text.lower()
        rows = text.splitlines()[1:]
        assert len(rows) == 4
        assert all(float(r.split(",")[2]) >= 0.0 for r in rows)

    def test_snapshot_mismatch_rejected(self, tmp_path):
        a, b, out = tmp_path / "a", tmp_path / "b", tmp_path / "cmp"
        run_cli("run", "pde", "redlight-a2", "--outdir", str(a), "--t-end", "2",
                "--snapshots", "1,2")
        run_cli("run", "pde", "redlight-a2", "--outdir", str(b), "--t-end", "2",
                "--snapshots", "2")
        assert run_cli("compare", str(a), str(b), "--outdir", str(out)) == 2

    def test_missing_manifest_rejected(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert run_cli("compare", str(empty), str(empty), "--outdir", str(tmp_path / "o")) == 2


class TestHypmap:
    def test_map_contains_reference_point(self, tmp_path):
        path = tmp_path / "map.csv"
        assert run_cli("hypmap", "--a", "2", "--resolution", "64", "--out", str(path)) == 0
        rows = path.read_text().splitlines()[1:]
        assert len(rows) == 64 * 64
        hits = [r for r in rows if r.endswith(",1")]
        assert hits, "expected a nonempty nonhyperbolic region"
        # the cell nearest (0.6, 0.6) is flagged
        best = min(
            rows,
            key=lambda r: (float(r.split(",")[0]) - 0.6) ** 2 + (float(r.split(",")[1]) - 0.6) ** 2,
        )
        assert best.endswith(",1")

    def test_explicit_velocities_match_shorthand(self, tmp_path):
        a_path, c_path = tmp_path / "a.csv", tmp_path / "c.csv"
        run_cli("hypmap", "--a", "2", "--resolution", "32", "--out", str(a_path))
        run_cli("hypmap", "--c0", "1", "--c1", "0.5", "--c2", "0.5", "--c3", "0.25",
                "--resolution", "32", "--out", str(c_path))
        assert a_path.read_bytes() == c_path.read_bytes()
