"""End-to-end CLI runs: artifacts, determinism, the comparison guard."""

import json
from pathlib import Path

import numpy as np
import pytest

from rankaudit.cli import main
from rankaudit.synthetic import write_biased_benchmark_csv

from conftest import make_scores


@pytest.fixture(scope="module")
def run_inputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    csv_path = root / "bench.csv"
    spec = write_biased_benchmark_csv(csv_path, n=700, seed=77)
    spec_path = root / "spec.json"
    spec_path.write_text(json.dumps(spec.to_dict()), encoding="utf-8")
    config = {
        "dataset": {"csv": str(csv_path), "spec": str(spec_path)},
        "split": {"fractions": [0.6, 0.2, 0.2], "seed": 7},
        "scorer": {"epochs": 120},
        "methods": [
            {"kind": "feature-repair", "name": "repair", "repair_level": 1.0},
            {"kind": "group-thresholds", "name": "thresholds"},
            {"kind": "reject-option", "name": "band-flip", "epsilon": 0.05},
            {"kind": "equalized-odds", "name": "odds-mixing", "seed": 5},
        ],
        "policies": [
            {"kind": "fixed-threshold", "threshold": 0.5},
            {"kind": "per-group-rates", "rate": "baseline-pdr"},
        ],
    }
    config_path = root / "run.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    return root, config_path, config


def test_run_writes_all_artifacts(run_inputs, tmp_path):
    root, config_path, _ = run_inputs
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_path), "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert "provenance.json" in names
    assert "dataset_summary.json" in names
    assert "scorer.txt" in names
    assert "dataset_export.csv" in names
    assert "report_native.json" in names
    assert "report_fixed-threshold-0.5.json" in names
    assert any(n.startswith("report_per-group-rates") for n in names)
    assert "scores_baseline_test.csv" in names
    assert "scores_repair_test.csv" in names
    assert any(n.startswith("decisions_native_odds-mixing") for n in names)
    assert any(n.startswith("scatter_native_repair") for n in names)
    assert any(n.startswith("tau_vs_baseline_") for n in names)
    assert any(n.startswith("correlation_matrix_") for n in names)
    assert any(n.startswith("fitted_thresholds") for n in names)
    # no stray temp files after atomic writes
    assert not [n for n in names if n.endswith(".tmp")]


def test_run_report_content_sanity(run_inputs, tmp_path):
    root, config_path, _ = run_inputs
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_path), "--out", str(out)]) == 0
    native = json.loads((out / "report_native.json").read_text())
    rows = native["rows"]
    assert set(native["methods"]) == {
        "baseline", "repair", "thresholds", "band-flip", "odds-mixing",
    }
    # postprocessors keep the baseline ranking and AUC rows exactly
    for name in ("thresholds", "band-flip", "odds-mixing"):
        assert native["tau_vs_baseline"][name]["overall"] == 1.0
        assert rows[name]["auc"] == rows["baseline"]["auc"]
    # provenance records the fitting partitions and seeds
    prov = native["provenance"]
    assert prov["postprocessors_fitted_on"] == "validation"
    assert prov["method_seeds"] == {"odds-mixing": 5}
    assert prov["split_sizes"]["test"] == 140
    # rate-controlled report pins both groups to the same rate
    controlled = json.loads(
        (out / "report_per-group-rates-0.45-0.45-baseline-pdr.json").read_text()
    ) if (out / "report_per-group-rates-0.45-0.45-baseline-pdr.json").exists() else None
    if controlled is None:
        candidates = [p for p in out.iterdir()
                      if p.name.startswith("report_per-group-rates")]
        controlled = json.loads(candidates[0].read_text())
    n_prot = native["provenance"]["split_sizes"]["test"]
    for name, row in controlled["rows"].items():
        assert abs(row["spd"]) <= 0.2  # bounded by 1/min(n_g), loose here


def test_run_byte_identical_reports(run_inputs, tmp_path):
    root, config_path, _ = run_inputs
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["run", "--config", str(config_path), "--out", str(out_a)]) == 0
    assert main(["run", "--config", str(config_path), "--out", str(out_b)]) == 0
    for report in sorted(out_a.glob("report_*.json")):
        twin = out_b / report.name
        assert report.read_bytes() == twin.read_bytes()
    # the randomized mixer's decisions replay identically too
    for dec in sorted(out_a.glob("decisions_*odds-mixing*.csv")):
        assert dec.read_bytes() == (out_b / dec.name).read_bytes()


def test_stage_commands_stop_early(run_inputs, tmp_path):
    root, config_path, _ = run_inputs
    out = tmp_path / "stage"
    assert main(["ingest", "--config", str(config_path), "--out", str(out)]) == 0
    assert (out / "dataset_summary.json").exists()
    assert not (out / "scorer.txt").exists()
    assert main(["train", "--config", str(config_path), "--out", str(out)]) == 0
    assert (out / "scorer.txt").exists()
    assert (out / "scores_baseline_test.csv").exists()
    assert not list(out.glob("report_*.json"))
    assert main(["audit", "--config", str(config_path), "--out", str(out)]) == 0
    assert (out / "report_native.json").exists()
    assert not list(out.glob("decisions_*.csv"))


def test_external_scores_method(run_inputs, tmp_path):
    root, config_path, config = run_inputs
    base_out = tmp_path / "base"
    assert main(["run", "--config", str(config_path), "--out", str(base_out)]) == 0
    # echo the baseline's test scores as an "external" method
    lines = (base_out / "scores_baseline_test.csv").read_text().strip().splitlines()
    ext_path = tmp_path / "external.csv"
    ext_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    cfg = dict(config)
    cfg["methods"] = [{"kind": "external-scores", "name": "mirror",
                       "path": str(ext_path)}]
    cfg_path = tmp_path / "ext.json"
    cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
    out = tmp_path / "ext_out"
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    report = json.loads((out / "report_native.json").read_text())
    assert report["tau_vs_baseline"]["mirror"]["overall"] == 1.0


def test_five_dataset_batch_reports_share_structure(tmp_path):
    """One run per benchmark fixture; every report mirrors the same table shape."""
    from rankaudit.synthetic import exact_rate_spec, write_exact_rate_csv

    table = {"adult": 0.2393, "compas": 0.5216, "dutch": 0.5239,
             "law": 0.8897, "student": 0.5362}
    report_paths = []
    for name, rate in table.items():
        csv_path = tmp_path / f"{name}.csv"
        write_exact_rate_csv(csv_path, n=600, positives=round(rate * 600))
        spec_path = tmp_path / f"{name}_spec.json"
        spec_path.write_text(json.dumps(exact_rate_spec(name, None).to_dict()),
                             encoding="utf-8")
        cfg = {
            "dataset": {"csv": str(csv_path), "spec": str(spec_path)},
            "split": {"fractions": [0.6, 0.2, 0.2], "seed": 7},
            "scorer": {"epochs": 60},
            "methods": [
                {"kind": "feature-repair", "name": "repair", "repair_level": 1.0},
                {"kind": "group-thresholds", "name": "thresholds"},
            ],
            "policies": [{"kind": "fixed-threshold", "threshold": 0.5}],
        }
        cfg_path = tmp_path / f"{name}_run.json"
        cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
        out = tmp_path / f"out_{name}"
        assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
        report_paths.append(out / "report_native.json")

    metric_keys = {"auc", "auc_protected", "auc_privileged", "acc", "spd", "eod", "pdr"}
    assert len(report_paths) == 5
    for path in report_paths:
        doc = json.loads(path.read_text())
        assert doc["methods"] == ["baseline", "repair", "thresholds"]
        for method in doc["methods"]:
            assert set(doc["rows"][method]) == metric_keys
            assert set(doc["tau_vs_baseline"][method]) == \
                {"overall", "protected", "privileged"}


def test_mitigation_requires_validation_partition(run_inputs, tmp_path):
    root, config_path, config = run_inputs
    cfg = dict(config)
    cfg["split"] = {"fractions": [1.0, 0.0, 0.0], "seed": 1}
    cfg_path = tmp_path / "noval.json"
    cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["mitigate", "--config", str(cfg_path),
                 "--out", str(tmp_path / "o")]) == 2  # DegenerateSplit


def test_config_validation_exit_codes(tmp_path):
    missing = tmp_path / "nope.json"
    assert main(["run", "--config", str(missing), "--out", str(tmp_path)]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 1
    no_csv = tmp_path / "nocsv.json"
    no_csv.write_text(json.dumps({"dataset": {"csv": str(tmp_path / "x.csv")}}),
                      encoding="utf-8")
    assert main(["run", "--config", str(no_csv), "--out", str(tmp_path)]) == 1


def test_baseline_only_run(run_inputs, tmp_path):
    root, config_path, config = run_inputs
    cfg = dict(config)
    cfg["methods"] = []
    cfg_path = tmp_path / "solo.json"
    cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
    out = tmp_path / "solo_out"
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    report = json.loads((out / "report_native.json").read_text())
    assert report["methods"] == ["baseline"]


# --- theory subcommand --------------------------------------------------------------

def test_theory_commands(tmp_path):
    out = tmp_path / "theory"
    assert main(["theory", "example", "--grid-size", "101",
                 "--out", str(out)]) == 0
    doc = json.loads((out / "theory_example_wage-gap.json").read_text())
    assert doc["monotonicity"]["holds"] is True
    assert doc["decomposition"]["0.5"]["decomposable"] is True

    assert main(["theory", "monotonicity", "--world", "anti-monotone",
                 "--grid-size", "101", "--out", str(out)]) == 0
    doc = json.loads((out / "monotonicity_anti-monotone.json").read_text())
    assert doc["holds"] is False
    assert doc["violation_count"] > 0
    assert doc["witnesses"]

    assert main(["theory", "pareto", "--grid-size", "201", "--out", str(out)]) == 0
    doc = json.loads((out / "pareto_wage-gap.json").read_text())
    assert doc["unfair"]["maximal"] is True
    assert doc["fair"]["maximal"] is False

    assert main(["theory", "decompose", "--grid-size", "101", "--tau", "0.5",
                 "--out", str(out)]) == 0
    doc = json.loads((out / "decomposition_wage-gap.json").read_text())
    assert doc["0.5"]["thresholds"]["female"] == 0.45


# --- compare subcommand --------------------------------------------------------------

def _fake_report(path, label, pdrs):
    rows = {}
    for method, pdr in pdrs.items():
        rows[method] = {"auc": 0.8, "auc_protected": 0.8, "auc_privileged": 0.8,
                        "acc": 0.7, "spd": -0.1, "eod": -0.05, "pdr": pdr}
    doc = {"policy_label": label, "rows": rows, "provenance": {}}
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def test_compare_zero_diff(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    _fake_report(a, "fixed-threshold-0.5", {"baseline": 0.30, "m": 0.31})
    _fake_report(b, "fixed-threshold-0.5", {"baseline": 0.30, "m": 0.31})
    out = tmp_path / "cmp.csv"
    assert main(["compare", str(a), str(b), "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 5  # header + 2 rows per report
    assert lines[0].endswith("warning")
    assert all(line.endswith(",") for line in lines[1:])  # no warnings set


def test_compare_identical_reports_pass_despite_internal_spread(tmp_path):
    # methods inside one report may sit at very different rates; comparing a
    # report against an identical twin juxtaposes nothing new and must pass
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    rows = {"baseline": 0.247, "sparse": 0.005, "dense": 0.393}
    _fake_report(a, "native", rows)
    _fake_report(b, "native", rows)
    out = tmp_path / "cmp.csv"
    assert main(["compare", str(a), str(b), "--out", str(out)]) == 0
    assert "uncontrolled-rate" not in out.read_text()


def test_compare_refuses_same_method_rate_drift(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    _fake_report(a, "fixed-threshold-0.5", {"baseline": 0.247})
    _fake_report(b, "fixed-threshold-0.5", {"baseline": 0.518})
    assert main(["compare", str(a), str(b), "--out", str(tmp_path / "c.csv")]) == 1
    assert "refusing to compare" in capsys.readouterr().err


def test_compare_refuses_uncontrolled_rates(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    _fake_report(a, "fixed-threshold-0.5", {"sparse": 0.005})
    _fake_report(b, "fixed-threshold-0.5", {"dense": 0.393})
    out = tmp_path / "cmp.csv"
    assert main(["compare", str(a), str(b), "--out", str(out)]) == 1
    err = capsys.readouterr().err
    assert "refusing to compare" in err
    assert not out.exists()


def test_compare_override_flag_emits_with_warning(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    _fake_report(a, "fixed-threshold-0.5", {"sparse": 0.005})
    _fake_report(b, "fixed-threshold-0.5", {"dense": 0.393})
    out = tmp_path / "cmp.csv"
    assert main(["compare", str(a), str(b), "--allow-uncontrolled",
                 "--out", str(out)]) == 0
    content = out.read_text()
    assert "uncontrolled-rate" in content


def test_compare_policy_mismatch(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    _fake_report(a, "fixed-threshold-0.5", {"m": 0.3})
    _fake_report(b, "per-group-rates-0.3-0.3", {"m": 0.3})
    assert main(["compare", str(a), str(b), "--out", str(tmp_path / "c.csv")]) == 1
