"""End-to-end tests for the command-line interface."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import haar

from muchan.channels import (
    Channel,
    ad_unitary,
    channel_to_dict,
    dag,
    depolarizing,
    holevo_werner,
    matrix_to_lists,
    superop_of,
)
from muchan.cli import main
from muchan.dynamics import example59_generator, gkls_data, generator_to_dict
from muchan.weyl import weyl_system

B2 = np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=complex)


def write_doc(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run_json(tmp_path, argv):
    out = str(tmp_path / "report_out.json")
    rc = main(argv + ["--out", out])
    assert rc == 0
    with open(out) as fh:
        return json.load(fh)


@pytest.fixture
def dep3(tmp_path):
    return write_doc(tmp_path, "dep3.json", channel_to_dict(depolarizing(3)))


@pytest.fixture
def adu(tmp_path):
    return write_doc(tmp_path, "adu.json",
                     channel_to_dict(ad_unitary(haar(3, seed=4))))


@pytest.fixture
def damping(tmp_path):
    k0 = np.array([[1, 0], [0, np.sqrt(0.5)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(0.5)], [0, 0]], dtype=complex)
    ch = Channel(2, kraus=[dag(k0), dag(k1)])
    return write_doc(tmp_path, "damping.json", channel_to_dict(ch))


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def test_analyze_conjugation(tmp_path, adu):
    rep = run_json(tmp_path, ["analyze", "--input", adu])
    assert rep["verdict"] == "MixedUnitary"
    assert rep["certificate_grade"] == "Constructive"
    assert len(rep["decomposition"]["weights"]) == 1
    assert rep["verify"]["is_cp"] and rep["verify"]["is_unital"]
    assert rep["peripheral"]["peripheral_dim"] == 9


def test_analyze_depolarizing(tmp_path, dep3):
    rep = run_json(tmp_path, ["analyze", "--input", dep3])
    assert rep["verdict"] == "MixedUnitary"
    assert rep["peripheral"]["peripheral_dim"] == 1
    assert rep["decomposition"]["residual"] < 1e-7


def test_analyze_holevo_werner(tmp_path):
    hw = write_doc(tmp_path, "hw.json", channel_to_dict(holevo_werner(3)))
    rep = run_json(tmp_path, ["analyze", "--input", hw,
                              "--fw-iters", "800", "--starts", "6"])
    assert rep["verdict"] == "NotMixedUnitary-Heuristic"
    assert rep["certificate_grade"] == "Heuristic"
    assert rep["witness"]["value_on_target"] <= -1e-3
    assert rep["witness"]["min_unitary_value"] >= -1e-8
    assert rep["decomposition"]["residual"] > 0.01


def test_analyze_rejects_non_unital(damping, capsys):
    assert main(["analyze", "--input", damping]) == 3
    assert "unital" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# evolve
# ---------------------------------------------------------------------------


def example59_doc(with_witness=True):
    doc = {"kind": "superop",
           "matrix": matrix_to_lists(example59_generator(B2))}
    if with_witness:
        doc["witness"] = {"kind": "transpose", "b": matrix_to_lists(B2)}
    return doc


def test_evolve_csv_scan(tmp_path):
    gen = write_doc(tmp_path, "e59.json", example59_doc())
    out = str(tmp_path / "scan.csv")
    rc = main(["evolve", "--input", gen, "--grid", "0.2:3.0:8", "--out", out])
    assert rc == 0
    lines = open(out).read().strip().splitlines()
    assert lines[0] == "t,witness_value,verdict,residual"
    assert len(lines) == 9
    rows = [line.split(",") for line in lines[1:]]
    values = [float(r[1]) for r in rows]
    verdicts = [r[2] for r in rows]
    assert values[0] < 0 < values[-1]
    assert verdicts[0] == "NotMixedUnitary-Analytic"
    assert verdicts[-1] == "MixedUnitary"


def test_evolve_json_scan(tmp_path):
    gen = write_doc(tmp_path, "e59.json", example59_doc())
    rep = run_json(tmp_path, ["evolve", "--input", gen,
                              "--grid", "0.5:2.5:5", "--format", "json"])
    scan = rep["scan"]
    assert scan["grid"][0] == pytest.approx(0.5)
    assert scan["t0_estimate"] is not None
    assert 1.0 <= scan["t0_estimate"] <= 1.5
    assert any(v == "MixedUnitary" for v in scan["mu_verdicts"])


def test_evolve_hermitian_jump_generator_all_mu(tmp_path):
    h = np.diag([1.0, -1.0]).astype(complex)
    jump = np.array([[0, 1], [1, 0]], dtype=complex)
    gen = write_doc(tmp_path, "hj.json",
                    generator_to_dict(gkls_data(hamiltonian=h, jumps=[jump])))
    out = str(tmp_path / "scan.csv")
    rc = main(["evolve", "--input", gen, "--grid", "0.5:2.0:4",
               "--starts", "4", "--out", out])
    assert rc == 0
    rows = open(out).read().strip().splitlines()[1:]
    assert all(row.split(",")[2] == "MixedUnitary" for row in rows)
    assert all(float(row.split(",")[3]) < 1e-6 for row in rows)


def test_evolve_bad_grid(tmp_path, capsys):
    gen = write_doc(tmp_path, "e59.json", example59_doc())
    assert main(["evolve", "--input", gen, "--grid", "nope"]) == 2
    assert "grid" in capsys.readouterr().err


def test_evolve_bad_witness_document(tmp_path):
    doc = example59_doc()
    doc["witness"] = {"kind": "transpose"}
    gen = write_doc(tmp_path, "bad.json", doc)
    assert main(["evolve", "--input", gen, "--grid", "0.5:1.0:2"]) == 2
    doc["witness"] = {"kind": "mystery", "b": matrix_to_lists(B2)}
    gen = write_doc(tmp_path, "bad2.json", doc)
    assert main(["evolve", "--input", gen, "--grid", "0.5:1.0:2"]) == 2


# ---------------------------------------------------------------------------
# index
# ---------------------------------------------------------------------------


def test_index_conjugation(tmp_path, adu):
    rep = run_json(tmp_path, ["index", "--input", adu, "--nmax", "3"])
    assert rep["index"]["index"] == 1
    assert rep["certificate_grade"] == "Heuristic"
    assert [p["n"] for p in rep["index"]["per_power"]] == [1, 2, 3]


# ---------------------------------------------------------------------------
# weyl
# ---------------------------------------------------------------------------


def test_weyl_depolarizing(tmp_path, dep3):
    rep = run_json(tmp_path, ["weyl", "--input", dep3])
    assert rep["weyl_covariant"] is True
    assert rep["verdict"] == "MixedUnitary"
    assert rep["certificate_grade"] == "Analytic"
    coeffs = rep["coefficients"]
    assert len(coeffs) == 9
    assert all(v == pytest.approx(1 / 9, abs=1e-12) for v in coeffs.values())


def test_weyl_single_conjugation(tmp_path):
    ws = weyl_system(3)
    doc = channel_to_dict(ad_unitary(ws.table[1, 0]))
    path = write_doc(tmp_path, "adw.json", doc)
    rep = run_json(tmp_path, ["weyl", "--input", path])
    assert rep["verdict"] == "MixedUnitary"
    assert rep["coefficients"]["1,0"] == pytest.approx(1.0, abs=1e-10)
    assert sum(rep["coefficients"].values()) == pytest.approx(1.0, abs=1e-10)


def test_weyl_holevo_werner(tmp_path):
    hw = write_doc(tmp_path, "hw.json", channel_to_dict(holevo_werner(3)))
    rep = run_json(tmp_path, ["weyl", "--input", hw])
    assert rep["weyl_covariant"] is False
    assert rep["verdict"] == "NotGMixedUnitary"
    assert rep["residual"] > 0.1
    assert "coefficients" not in rep


def test_weyl_generator_membership(tmp_path):
    ws = weyl_system(3)
    lmap = 2.0 * (superop_of(ad_unitary(ws.table[1, 0])) - np.eye(9)) \
        + 0.5 * (superop_of(ad_unitary(ws.table[0, 2])) - np.eye(9))
    gen = write_doc(tmp_path, "gen.json",
                    {"kind": "superop", "matrix": matrix_to_lists(lmap)})
    rep = run_json(tmp_path, ["weyl", "--input", gen])
    assert rep["object"] == "generator"
    assert rep["verdict"] == "Member"
    assert rep["coefficients"]["1,0"] == pytest.approx(2.0, abs=1e-8)
    assert rep["coefficients"]["0,2"] == pytest.approx(0.5, abs=1e-8)


def test_weyl_generator_not_member(tmp_path):
    gen = write_doc(tmp_path, "e59.json", example59_doc(with_witness=False))
    rep = run_json(tmp_path, ["weyl", "--input", gen])
    assert rep["verdict"] == "NotMember"
    assert rep["weyl_covariant"] is False


def test_weyl_invalid_generator(tmp_path, capsys):
    bad = np.arange(16, dtype=float).reshape(4, 4)
    gen = write_doc(tmp_path, "bad.json",
                    {"kind": "superop", "matrix": matrix_to_lists(bad)})
    assert main(["weyl", "--input", gen]) == 3


# ---------------------------------------------------------------------------
# decompose-expectation
# ---------------------------------------------------------------------------


def test_decompose_expectation_conjugation(tmp_path, adu):
    rep = run_json(tmp_path, ["decompose-expectation", "--input", adu])
    assert rep["peripheral_dim"] == 9
    assert rep["decaying_dim"] == 0
    u = np.array([[complex(a, b) for a, b in row]
                  for row in rep["automorphism_unitary"]])
    assert np.linalg.norm(dag(u) @ u - np.eye(3)) < 1e-9
    beta = np.array([[complex(a, b) for a, b in row]
                     for row in rep["decaying_part"]])
    assert np.linalg.norm(beta) < 1e-9


def test_decompose_expectation_depolarizing(tmp_path, dep3):
    rep = run_json(tmp_path, ["decompose-expectation", "--input", dep3])
    assert rep["peripheral_dim"] == 1
    assert rep["decaying_dim"] == 8


def test_decompose_expectation_rejects_non_unital(damping):
    assert main(["decompose-expectation", "--input", damping]) == 3


# ---------------------------------------------------------------------------
# Plumbing: exit codes, determinism, atomic output, process entry
# ---------------------------------------------------------------------------


def test_parse_error_exit_codes(tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert main(["analyze", "--input", missing]) == 2
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    assert main(["analyze", "--input", str(garbled)]) == 2
    wrong = write_doc(tmp_path, "wrong.json", {"hello": 1})
    assert main(["analyze", "--input", wrong]) == 2
    assert main(["weyl", "--input", wrong]) == 2
    capsys.readouterr()


def test_csv_rejected_for_json_reports(tmp_path, dep3, capsys):
    assert main(["weyl", "--input", dep3, "--format", "csv"]) == 2
    assert "JSON" in capsys.readouterr().err


def test_reports_are_byte_identical(tmp_path, dep3):
    paths = [str(tmp_path / f"r{k}.json") for k in (1, 2)]
    for p in paths:
        assert main(["analyze", "--input", dep3, "--seed", "7", "--out", p]) == 0
    blobs = [open(p, "rb").read() for p in paths]
    assert blobs[0] == blobs[1]
    assert len(blobs[0]) > 100


def test_output_is_atomic_and_clean(tmp_path, dep3):
    out = tmp_path / "sub" / "report.json"
    out.parent.mkdir()
    assert main(["weyl", "--input", dep3, "--out", str(out)]) == 0
    assert out.exists()
    leftovers = [p for p in os.listdir(out.parent) if p.endswith(".tmp")]
    assert leftovers == []


def test_stdout_when_no_out_flag(tmp_path, dep3, capsys):
    assert main(["weyl", "--input", dep3]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["verdict"] == "MixedUnitary"


def test_module_entry_point(tmp_path, dep3):
    env = dict(os.environ, MUCHAN_THREADS="1")
    proc = subprocess.run(
        [sys.executable, "-m", "muchan.cli", "weyl", "--input", dep3],
        capture_output=True, text=True, env=env, timeout=120)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["verdict"] == "MixedUnitary"
