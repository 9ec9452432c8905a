"""Tests for the command-line interface: exit codes and deterministic output."""

import json

import pytest
import yaml

from ctxflow.cli import main


class TestValidate:
    def test_kiosk_bundle_is_valid(self, kiosk_bundle, capsys):
        assert main(["validate", str(kiosk_bundle)]) == 0
        assert "ok" in capsys.readouterr().out

    def test_missing_scenario_file(self, tmp_path, kiosk_dir, capsys):
        for name in ("graph.yaml", "repo.yaml", "model.yaml"):
            (tmp_path / name).write_text((kiosk_dir / name).read_text())
        (tmp_path / "bundle.yaml").write_text(
            (kiosk_dir / "bundle.yaml").read_text()
        )
        assert main(["validate", str(tmp_path / "bundle.yaml")]) == 1
        assert "scenario.yaml" in capsys.readouterr().out

    def test_dangling_fragment_in_rule(self, tmp_path, kiosk_dir, capsys):
        for name in ("graph.yaml", "repo.yaml", "scenario.yaml", "bundle.yaml"):
            (tmp_path / name).write_text((kiosk_dir / name).read_text())
        model = yaml.safe_load((kiosk_dir / "model.yaml").read_text())
        model["rules"][2]["fragment"] = "ghost"
        (tmp_path / "model.yaml").write_text(yaml.safe_dump(model))
        assert main(["validate", str(tmp_path / "bundle.yaml")]) == 1
        assert "unknown fragment" in capsys.readouterr().out


class TestRun:
    def test_kiosk_summary(self, kiosk_bundle, capsys):
        assert main(["run", str(kiosk_bundle)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["final_order"][-2:] == ["Bill Payment", "Storage in Cloud"]
        assert len(summary["adaptations"]) == 5

    def test_ideal_scenario_has_no_adaptations(self, ideal_bundle, capsys):
        assert main(["run", str(ideal_bundle)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["adaptations"] == []
        assert summary["final_order"] == [
            "Patient Registration",
            "Patient Medical Info Collection",
            "Treatment",
            "Storage in Cloud",
            "Bill Payment",
        ]

    def test_output_files_are_byte_identical_across_runs(
        self, kiosk_bundle, tmp_path
    ):
        out1, out2 = tmp_path / "one", tmp_path / "two"
        assert main(["run", str(kiosk_bundle), "-o", str(out1)]) == 0
        assert main(["run", str(kiosk_bundle), "-o", str(out2)]) == 0
        assert (out1 / "summary.json").read_bytes() == (
            out2 / "summary.json"
        ).read_bytes()
        assert (out1 / "trace.log").read_bytes() == (out2 / "trace.log").read_bytes()

    def test_non_monotone_scenario_fails_validation(
        self, tmp_path, kiosk_dir, capsys
    ):
        for name in ("graph.yaml", "repo.yaml", "model.yaml", "bundle.yaml"):
            (tmp_path / name).write_text((kiosk_dir / name).read_text())
        (tmp_path / "scenario.yaml").write_text(
            yaml.safe_dump(
                {
                    "version": 1,
                    "kind": "scenario",
                    "situations": [
                        {"time": 10, "contexts": []},
                        {"time": 5, "contexts": []},
                    ],
                }
            )
        )
        assert main(["run", str(tmp_path / "bundle.yaml")]) == 1


class TestVerify:
    def test_kiosk_net_passes_all_properties(self, kiosk_bundle, capsys):
        assert main(["verify", str(kiosk_bundle)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["verdict"] == "pass"
        assert report["one_safe"] is True
        assert report["dead_transitions"] == []
        assert report["dead_markings"] == 1
        assert report["goal_is_only_dead_marking"] is True
        assert report["goal_reachable"] is True

    def test_tiny_limit_is_inconclusive(self, kiosk_bundle, capsys):
        assert main(["verify", str(kiosk_bundle), "--limit", "5"]) == 3
        report = json.loads(capsys.readouterr().out)
        assert report["partial"] is True

    def test_report_written_deterministically(self, kiosk_bundle, tmp_path, capsys):
        out1, out2 = tmp_path / "one", tmp_path / "two"
        main(["verify", str(kiosk_bundle), "-o", str(out1)])
        capsys.readouterr()
        main(["verify", str(kiosk_bundle), "-o", str(out2)])
        assert (out1 / "report.json").read_bytes() == (
            out2 / "report.json"
        ).read_bytes()


class TestMetrics:
    def test_defaults(self, kiosk_bundle, capsys):
        assert main(["metrics", str(kiosk_bundle)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["structure"]["mcc_extra"] == 2
        assert report["structure"]["noa_extra"] == 0
        assert report["execution_time"]["value"] == 25.0

    def test_custom_costs(self, kiosk_bundle, capsys):
        assert main(
            ["metrics", str(kiosk_bundle), "--ta", "2", "--cct", "0"]
        ) == 0
        report = json.loads(capsys.readouterr().out)
        # 5 activities x (2 + 1 + 1 + 1 + 0)
        assert report["execution_time"]["value"] == 25.0


class TestQuery:
    def test_network_status(self, kiosk_dir, capsys):
        rc = main(
            [
                "query",
                str(kiosk_dir / "scenario.yaml"),
                "AND Network WHERE parameter INSTANCE_OF Network",
            ]
        )
        assert rc == 0
        assert capsys.readouterr().out.strip() == (
            "Network(Network, Status, =, Unavailable)"
        )

    def test_null_result(self, kiosk_dir, capsys):
        rc = main(
            [
                "query",
                str(kiosk_dir / "scenario.yaml"),
                "AND Caregiver WHERE attr Expertise = Surgery",
            ]
        )
        assert rc == 0
        assert capsys.readouterr().out.strip() == "NULL"

    def test_parse_error_exit_code(self, kiosk_dir, capsys):
        rc = main(["query", str(kiosk_dir / "scenario.yaml"), "HUH what"])
        assert rc == 1
        assert "position" in capsys.readouterr().out

    def test_incompatible_arith_is_runtime_error(self, kiosk_dir, capsys):
        rc = main(
            [
                "query",
                str(kiosk_dir / "scenario.yaml"),
                "ADD Manpower(HA, Count, =, 1), Manpower(Other, Count, =, 2)",
            ]
        )
        assert rc == 2
