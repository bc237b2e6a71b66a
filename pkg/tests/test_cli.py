import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from starnls.cli import main
from starnls.fieldio import load_field_csv, save_field_csv
from starnls.core import VertexCoupling, mass
from starnls import StationarySpec, build_state, make_grid


def run(args):
    return main(args)


class TestConstruct:
    def test_ground_state_outputs(self, tmp_path):
        out = tmp_path / "run"
        code = run(
            [
                "construct", "--alpha", "-1", "--omega", "1", "--mu", "1",
                "--edges", "3", "--j", "0", "--edge-length", "20",
                "--points", "4000", "--out", str(out),
            ]
        )
        assert code == 0
        obs = json.loads((out / "observables.json").read_text())
        assert obs["offset"] == pytest.approx(0.5 * math.log(2.0), abs=1e-12)
        assert obs["mass_closed_form"] == pytest.approx(4.0)
        assert obs["energy_closed_form"] == pytest.approx(-26.0 / 27.0)
        assert obs["mass_quadrature"] == pytest.approx(4.0, abs=1e-6)
        assert obs["energy_quadrature"] == pytest.approx(-26.0 / 27.0, abs=1e-5)
        assert (out / "manifest.json").exists()
        field, coupling = load_field_csv(out / "field.csv")
        assert coupling.alpha == -1.0
        assert field.vertex.real == pytest.approx(4.0 / 3.0, abs=1e-12)

    def test_existence_bound_exit_code(self, tmp_path):
        code = run(
            [
                "construct", "--alpha", "-1", "--omega", "0.1", "--edges", "3",
                "--j", "0", "--out", str(tmp_path / "r"),
            ]
        )
        assert code == 3

    def test_unknown_subcommand(self):
        assert run(["frobnicate"]) == 2

    def test_config_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"omega": 2.0, "points": 600}))
        out = tmp_path / "run"
        code = run(
            [
                "construct", "--config", str(cfg), "--omega", "4.0",
                "--edge-length", "12", "--out", str(out),
            ]
        )
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["parameters"]["omega"] == 4.0  # flag wins
        assert manifest["parameters"]["points"] == 600  # config beats default


class TestManifestRoundTrip:
    def test_rerun_byte_identical(self, tmp_path):
        first = tmp_path / "a"
        code = run(
            [
                "construct", "--alpha", "-1", "--omega", "1", "--edges", "3",
                "--j", "0", "--edge-length", "16", "--points", "800",
                "--out", str(first),
            ]
        )
        assert code == 0
        second = tmp_path / "b"
        code = run(
            ["rerun", "--from-manifest", str(first / "manifest.json"), "--out", str(second)]
        )
        assert code == 0
        assert (first / "field.csv").read_bytes() == (second / "field.csv").read_bytes()
        assert (first / "observables.json").read_bytes() == (
            second / "observables.json"
        ).read_bytes()


class TestVK:
    def test_single_sign_change_supercritical(self, tmp_path):
        out = tmp_path / "vk"
        code = run(
            [
                "vk", "--alpha", "-1", "--mu", "3", "--edges", "3",
                "--omega-range", "0.12:10", "--samples", "40", "--out", str(out),
            ]
        )
        assert code == 0
        report = json.loads((out / "vk_report.json").read_text())
        assert report["sign_changes"] == 1
        assert report["omega_star"] is not None
        with (out / "vk.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["omega", "vk_value"]
        values = [float(r[1]) for r in rows[1:]]
        signs = np.sign(values)
        assert int(np.sum(signs[1:] * signs[:-1] < 0)) == 1

    def test_range_below_bound_rejected(self, tmp_path):
        code = run(
            [
                "vk", "--alpha", "-1", "--mu", "1", "--edges", "3",
                "--omega-range", "0.05:10", "--out", str(tmp_path / "vk"),
            ]
        )
        assert code == 3

    def test_parallel_jobs_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out, jobs in ((a, "1"), (b, "2")):
            code = run(
                [
                    "vk", "--alpha", "-1", "--mu", "1.5", "--edges", "3",
                    "--omega-range", "0.2:5", "--samples", "12",
                    "--jobs", jobs, "--out", str(out),
                ]
            )
            assert code == 0
        assert (a / "vk.csv").read_bytes() == (b / "vk.csv").read_bytes()


class TestEvolveAndFriends:
    def test_evolve_standing_wave_outputs(self, tmp_path):
        out = tmp_path / "ev"
        code = run(
            [
                "evolve", "--alpha", "-1", "--omega", "1", "--edges", "3",
                "--j", "0", "--edge-length", "12", "--points", "240",
                "--dt", "1e-3", "--t-final", "0.2", "--stride", "20",
                "--snapshot-stride", "100", "--out", str(out),
            ]
        )
        assert code == 0
        with (out / "observables.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "mass", "energy", "vertex_re", "vertex_im", "deviation"]
        masses = [float(r[1]) for r in rows[1:]]
        assert max(masses) - min(masses) < 1e-8
        assert (out / "final.csv").exists()
        assert (out / "snapshots" / "snapshot_0000.csv").exists()

    def test_evolve_from_field_csv(self, tmp_path):
        grid = make_grid(3, 12.0, 240)
        fld = build_state(StationarySpec.delta_state(-1.0, 1.0, 1.0, 3, 0), grid)
        src = tmp_path / "input.csv"
        save_field_csv(src, fld, VertexCoupling(-1.0))
        out = tmp_path / "ev"
        code = run(
            [
                "evolve", "--input", str(src), "--mu", "1", "--dt", "1e-3",
                "--t-final", "0.1", "--stride", "10", "--out", str(out),
            ]
        )
        assert code == 0

    def test_travel_report(self, tmp_path):
        out = tmp_path / "tr"
        code = run(
            [
                "travel", "--omega", "1", "--mu", "1", "--edges", "4",
                "--a", "-2", "--v", "1", "--edge-length", "12",
                "--points", "240", "--dt", "1e-3", "--t-final", "1.0",
                "--out", str(out),
            ]
        )
        assert code == 0
        report = json.loads((out / "travel_report.json").read_text())
        assert report["max_mismatch"] < 1e-2

    def test_minimize_action(self, tmp_path):
        out = tmp_path / "mn"
        code = run(
            [
                "minimize", "--mode", "action", "--alpha", "-5", "--omega", "4",
                "--mu", "1", "--edges", "3", "--edge-length", "6",
                "--points", "240", "--seed", "1", "--out", str(out),
            ]
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["converged"] is True
        assert report["action"] == pytest.approx(0.6302, abs=2e-3)
        with (out / "iterates.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["iteration", "action", "gradient_norm", "mass"]

    def test_stability_report(self, tmp_path):
        out = tmp_path / "st"
        code = run(
            [
                "stability", "--alpha", "-5", "--omega", "4", "--edges", "3",
                "--j", "0", "--edge-length", "6", "--points", "240",
                "--perturbation", "0.01", "--dt", "1e-3", "--t-final", "1.0",
                "--stride", "50", "--seed", "2", "--out", str(out),
            ]
        )
        assert code == 0
        report = json.loads((out / "stability_report.json").read_text())
        assert report["max_deviation"] < 5 * report["initial_deviation"]


class TestFieldCSVFormat:
    def test_round_trip(self, tmp_path):
        grid = make_grid(3, 10.0, 64)
        fld = build_state(StationarySpec.delta_state(-1.0, 1.0, 1.0, 3, 0), grid)
        path = tmp_path / "f.csv"
        save_field_csv(path, fld, VertexCoupling(-1.0))
        loaded, coupling = load_field_csv(path)
        assert (loaded - fld).max_abs() == 0.0
        assert coupling.alpha == -1.0

    def test_vertex_row_repeated_per_edge(self, tmp_path):
        grid = make_grid(3, 10.0, 64)
        fld = build_state(StationarySpec.delta_state(-1.0, 1.0, 1.0, 3, 0), grid)
        path = tmp_path / "f.csv"
        save_field_csv(path, fld, VertexCoupling(-1.0))
        with path.open() as fh:
            fh.readline()  # JSON header
            rows = list(csv.reader(fh))
        vertex_rows = [r for r in rows[1:] if float(r[1]) == 0.0]
        assert len(vertex_rows) == 3
        assert {r[0] for r in vertex_rows} == {"0", "1", "2"}
