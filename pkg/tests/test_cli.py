import csv
import json
import math
import subprocess
import sys

import pytest

from conjcorr import cli
from conjcorr.report import estimate_summary, figure_rows


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture
def gaussian_state(tmp_path):
    return _write(tmp_path / "gauss.yaml", "kind: gaussian\nalpha: 1\nt0_over_m: 1\n")


@pytest.fixture
def coherent_state(tmp_path):
    return _write(tmp_path / "coh.yaml", "kind: coherent\nn: 2\nA: 1.3\ntheta: 0.4\n")


def test_report_gaussian(tmp_path, gaussian_state):
    out = tmp_path / "r.json"
    assert cli.main(["report", "--state", gaussian_state, "--b", "1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1
    assert "hbar = 1" in doc["units"]
    assert abs(doc["quantum"]["global"] - 1.0) < 1e-6
    assert doc["causal"]["combo"]["feasible"]
    ak = doc["arthurs_kelly"][0]
    assert abs(ak["global_moment"] - doc["quantum"]["global"]) == pytest.approx(
        abs(doc["residuals"]["ak_global_minus_quantum"][0]), abs=1e-15)
    assert ak["conditional_given_x1"]["value"]


def test_report_coherent(tmp_path, coherent_state):
    out = tmp_path / "r.json"
    assert cli.main(["report", "--state", coherent_state, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["causal"]["epsilon_plus"]["global"] == pytest.approx(5.0, abs=1e-6)
    assert doc["causal"]["combo"]["lambda_plus"] == pytest.approx(0.5, abs=1e-8)


def _all_finite(node):
    if isinstance(node, dict):
        return all(_all_finite(v) for v in node.values())
    if isinstance(node, list):
        return all(_all_finite(v) for v in node)
    if isinstance(node, float):
        return math.isfinite(node)
    return True


def test_report_is_deterministic_and_finite(tmp_path, tmp_path_factory):
    state = _write(tmp_path / "fock.yaml", "kind: coherent\nn: 1\nA: 1.3\ntheta: 0.4\n")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert cli.main(["report", "--state", state, "--b-schedule", "0.5,2", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert _all_finite(json.loads(a.read_text()))


def test_config_file_and_csv_round_trip(tmp_path):
    cfg = _write(tmp_path / "run.yaml",
                 "state:\n  kind: custom\n  hermite_coefficients: [[1, 0], [0.5, 0.5]]\n"
                 "b_schedule: [0.5, 1.0]\nformat: csv\n")
    out = tmp_path / "r.csv"
    assert cli.main(["report", "--config", cfg, "--out", str(out)]) == 0
    raw = out.read_bytes()
    assert b"\r\n" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == ["section", "quantity", "b", "x", "value"]
    values = [float(r[4]) for r in rows[1:]]
    # repr floats parse back exactly
    assert all(repr(v) == r[4] for v, r in zip(values, rows[1:]))


def test_figure_csv(tmp_path):
    out = tmp_path / "f.csv"
    assert cli.main(["figure", "--b-over-dq", "1", "--dqdp", "0.7071067811865476,0.5",
                     "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert [float(r["dqdp"]) for r in rows] == [2 ** -0.5, 0.5]
    assert float(rows[0]["ratio_numeric"]) == pytest.approx(0.35355, abs=1e-5)
    assert abs(float(rows[1]["ratio_numeric"])) < 1e-10


def test_figure_large_product_small_b():
    (row,) = figure_rows([0.1], [5.0])
    assert row[2] > 0.98


def test_figure_schedule_errors(tmp_path):
    out = tmp_path / "f.csv"
    assert cli.main(["figure", "--dqdp", "0.3", "--out", str(out)]) == 2
    assert cli.main(["figure", "--b-over-dq", "-1", "--out", str(out)]) == 2
    assert not out.exists()


def test_sample_outputs_are_reproducible(tmp_path, gaussian_state):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / f"{tag}.csv"
        assert cli.main(["sample", "--state", gaussian_state, "--b", "1", "--samples", "20000",
                         "--seed", "7", "--out", str(out)]) == 0
        outs.append((out.read_bytes(), (tmp_path / f"{tag}.summary.json").read_bytes()))
    assert outs[0] == outs[1]
    summary = json.loads(outs[0][1])
    for key in ("mean_x1", "mean_x2", "global_moment"):
        assert summary[key]["std_error"] > 0
    assert abs(summary["global_moment"]["z_score"]) < 5
    rows = list(csv.reader(outs[0][0].decode().splitlines()))
    assert rows[0] == ["x1", "x2"] and len(rows) == 20001


def test_sample_count_error(tmp_path, gaussian_state):
    out = tmp_path / "s.csv"
    assert cli.main(["sample", "--state", gaussian_state, "--samples", "50", "--out", str(out)]) == 2
    assert not out.exists()


def test_composite_reports(tmp_path):
    out = tmp_path / "e.json"
    assert cli.main(["composite", "--kind", "epr", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["pair_marginals"]) == 4
    assert all(v["residual"] < 1e-5 for v in doc["pair_marginals"].values())
    params = _write(tmp_path / "ec.yaml", "m: 2\nn: 1\nalpha: [1.0, 0.5]\nbeta: [-0.3, 0.2]\n")
    assert cli.main(["composite", "--kind", "entangled-coherent", "--params", params, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["factors"]["a"]["lambda_plus"] == 0.5 and doc["factors"]["b"]["lambda_plus"] == 0.5


@pytest.mark.parametrize("argv", [
    ["composite", "--kind", "unknown"],
    ["report"],
    ["frobnicate"],
])
def test_usage_errors(argv):
    assert cli.main(argv) == 2


def test_malformed_config_writes_nothing(tmp_path):
    out = tmp_path / "r.json"
    bad = _write(tmp_path / "bad.yaml", "kind: coherent\nn: 2\ncolour: blue\n")
    assert cli.main(["report", "--state", bad, "--out", str(out)]) == 2
    broken = _write(tmp_path / "broken.yaml", "kind: [gaussian\n")
    assert cli.main(["report", "--state", broken, "--out", str(out)]) == 2
    negative = _write(tmp_path / "neg.yaml", "kind: gaussian\nalpha: -1\n")
    assert cli.main(["report", "--state", negative, "--out", str(out)]) == 2
    assert not out.exists()


def test_numeric_failure_exit_code(tmp_path):
    # a grid far too coarse for the state trips the tolerance checks
    state = _write(tmp_path / "g.yaml", "kind: coherent\nn: 40\nA: 3\n")
    out = tmp_path / "r.json"
    assert cli.main(["report", "--state", state, "--grid-n", "16", "--out", str(out)]) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "conjcorr", "figure", "--b-over-dq", "0.5",
                           "--dqdp", "1"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "b_over_dq,dqdp,ratio_numeric,ratio_closed_form,abs_error"


def test_summary_has_standard_errors():
    from conjcorr import arthurs_kelly as ak
    from conjcorr.states import GaussianPacketParams, build_gaussian_packet

    wf = build_gaussian_packet(GaussianPacketParams(1.0, 0.0, 1.0))
    joint = ak.joint_distribution(wf, 1.0)
    est = ak.estimate_from_samples(ak.sample_heterodyne(joint, 5000, 2))
    doc = estimate_summary(est, ak.joint_moments(joint), 1.0)
    assert all(doc[k]["std_error"] > 0 for k in ("mean_x1", "mean_x2", "global_moment"))
    json.dumps(doc, allow_nan=False)
