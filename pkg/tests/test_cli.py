import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from rglt import cli
from rglt.export import read_triplets, write_triplets

LAP1 = {"0": 2, "1": -1, "-1": -1}


def run(tmp_path, cfg, command, cfg_b=None, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    argv = [command, "--config", str(path), "--out", str(tmp_path / "out")]
    if cfg_b is not None:
        pb = tmp_path / ("b_" + name)
        pb.write_text(json.dumps(cfg_b))
        argv += ["--config-b", str(pb)]
    return cli.main(argv)


def read_values(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "value"
    return np.array([float(v) for v in lines[1:]])


def test_counts_square_and_disk(tmp_path):
    cfg = {"domain": {"kind": "hypercube"}, "dimension": 2, "sweep": [3, 7, 15]}
    assert run(tmp_path, cfg, "counts") == 0
    rows = list(csv.DictReader((tmp_path / "out/counts/counts.csv").open()))
    assert [float(r["ratio"]) for r in rows] == [1.0, 1.0, 1.0]

    cfg = {"domain": {"kind": "disk", "center": [0.5, 0.5], "radius": 0.5}, "sweep": [15, 31, 63, 127, 255]}
    assert run(tmp_path, cfg, "counts") == 0
    rows = list(csv.DictReader((tmp_path / "out/counts/counts.csv").open()))
    assert list(rows[0]) == ["n", "N", "d_omega", "ratio", "band_count_2h", "near_boundary_k2"]
    assert abs(float(rows[-1]["ratio"]) - np.pi / 4) <= 0.02
    near = [int(r["near_boundary_k2"]) / int(r["N"]) for r in rows]
    assert all(b < a for a, b in zip(near, near[1:]))
    assert all(r["band_count_2h"] for r in rows)
    summary = json.loads((tmp_path / "out/counts/summary.json").read_text())
    assert summary["command"] == "counts" and len(summary["rows"]) == 5


def test_counts_implicit_without_distance_leaves_band_blank(tmp_path):
    cfg = {"domain": {"kind": "implicit", "predicate": "(x1-0.5)^2 + (x2-0.5)^2 < 0.1"}, "sweep": [7, 15]}
    assert run(tmp_path, cfg, "counts") == 0
    rows = list(csv.DictReader((tmp_path / "out/counts/counts.csv").open()))
    assert all(r["band_count_2h"] == "" for r in rows)
    assert json.loads((tmp_path / "out/counts/summary.json").read_text())["warnings"]


def test_spectrum_toeplitz_closed_form(tmp_path):
    cfg = {"method": "toeplitz", "dimension": 1, "domain": {"kind": "hypercube"}, "stencil": LAP1, "sweep": [5],
           "options": {"export_matrix": True}}
    assert run(tmp_path, cfg, "spectrum") == 0
    vals = read_values(tmp_path / "out/spectrum/5/spectrum.csv")
    np.testing.assert_allclose(vals, np.sort(2 - 2 * np.cos(np.arange(1, 6) * np.pi / 6)), atol=1e-12)
    meta = json.loads((tmp_path / "out/spectrum/5/spectrum.json").read_text())
    assert meta["kind"] == "eig-hermitian" and meta["matrix_size"] == 5
    M = read_triplets(tmp_path / "out/spectrum/5/matrix.txt").toarray()
    np.testing.assert_array_equal(M, 2 * np.eye(5) - np.eye(5, k=1) - np.eye(5, k=-1))
    side = json.loads((tmp_path / "out/spectrum/5/matrix.txt.json").read_text())
    assert side["size"] == 5 and side["d_n_omega"] == 5 and side["n"] == [5]


def test_spectrum_sw_square(tmp_path):
    cfg = {"method": "shortley-weller", "dimension": 2, "domain": {"kind": "hypercube"}, "sweep": [3]}
    assert run(tmp_path, cfg, "spectrum") == 0
    vals = read_values(tmp_path / "out/spectrum/3/spectrum.csv")
    lam = 16 * (2 - 2 * np.cos(np.arange(1, 4) * np.pi / 4))
    exact = np.sort((lam[:, None] + lam[None, :]).ravel()) / 9
    np.testing.assert_allclose(vals, exact, rtol=1e-12)


def test_spectrum_fe_square(tmp_path):
    cfg = {"method": "fe-p1", "domain": {"kind": "hypercube"}, "sweep": [3], "options": {"spectrum": "singular"}}
    assert run(tmp_path, cfg, "spectrum") == 0
    vals = read_values(tmp_path / "out/spectrum/3/spectrum.csv")
    T = 2 * np.eye(3) - np.eye(3, k=1) - np.eye(3, k=-1)
    K = np.kron(T, np.eye(3)) + np.kron(np.eye(3), T)
    np.testing.assert_allclose(vals, np.sort(np.linalg.eigvalsh(K)), atol=1e-12)


def test_compare_toeplitz_and_zero(tmp_path):
    cfg = {"method": "toeplitz", "dimension": 1, "stencil": LAP1, "sweep": [31, 63, 127]}
    assert run(tmp_path, cfg, "compare") == 0
    summary = json.loads((tmp_path / "out/compare/summary.json").read_text())
    w = summary["wasserstein1"]
    assert all(b < a for a, b in zip(w, w[1:])) and summary["trend_ok"]
    rep = json.loads((tmp_path / "out/compare/63/report.json").read_text())
    assert rep["wasserstein1"] == w[1]

    zero = {"method": "glt-expr", "dimension": 1, "expr": {"op": "zero"}, "sweep": [4, 8]}
    assert run(tmp_path, zero, "compare", name="zero.json") == 0
    assert json.loads((tmp_path / "out/compare/summary.json").read_text())["wasserstein1"] == [0.0, 0.0]


def test_compare_trend_failure_exit_code(tmp_path):
    # on very coarse grids the lattice count of a small disk jumps around
    cfg = {"method": "toeplitz", "dimension": 2, "stencil": {"0,0": 4, "1,0": -1, "-1,0": -1, "0,1": -1, "0,-1": -1},
           "domain": {"kind": "disk", "center": [0.5, 0.5], "radius": 0.2}, "sweep": [3, 4, 5]}
    assert run(tmp_path, cfg, "compare") == 4
    summary = json.loads((tmp_path / "out/compare/summary.json").read_text())
    w = summary["wasserstein1"]
    assert not summary["trend_ok"] and w[2] > 1.1 * w[1]


def test_acs_examples(tmp_path):
    x = {"method": "glt-expr", "dimension": 1, "expr": {"op": "D", "a": "x1"}, "sweep": [128, 512]}
    zero = {"method": "glt-expr", "dimension": 1, "expr": {"op": "zero"}, "sweep": [128, 512]}
    half = {"method": "glt-expr", "dimension": 1, "expr": {"op": "D", "a": "x1/2"}, "sweep": [128, 512]}
    assert run(tmp_path, x, "acs", cfg_b=x) == 0
    s = json.loads((tmp_path / "out/acs/summary.json").read_text())
    assert s["per_n_p"] == [0.0, 0.0] and s["pmea_of_symbol_difference"] == 0
    assert run(tmp_path, x, "acs", cfg_b=zero) == 0
    s = json.loads((tmp_path / "out/acs/summary.json").read_text())
    assert s["dacs_estimate"] == pytest.approx(1.0) and s["pmea_of_symbol_difference"] == pytest.approx(1.0, abs=0.01)
    assert run(tmp_path, x, "acs", cfg_b=half) == 0
    s = json.loads((tmp_path / "out/acs/summary.json").read_text())
    assert abs(s["dacs_estimate"] - 0.5) <= 0.05 and abs(s["pmea_of_symbol_difference"] - 0.5) <= 0.05
    assert json.loads((tmp_path / "out/acs/512/p.json").read_text())["p"] == s["dacs_estimate"]


def test_acs_size_mismatch(tmp_path):
    a = {"method": "toeplitz", "dimension": 2, "stencil": {"0,0": 1}, "sweep": [8]}
    b = {**a, "domain": {"kind": "disk", "center": [0.5, 0.5], "radius": 0.3}}
    assert run(tmp_path, a, "acs", cfg_b=b) == 3


@pytest.mark.parametrize("cfg", [
    {"method": "nope", "sweep": [3]},
    {"method": "toeplitz", "dimension": 1, "stencil": LAP1, "sweep": [8, 4]},
    {"method": "toeplitz", "dimension": 1, "stencil": LAP1, "sweep": []},
    {"method": "toeplitz", "dimension": 1, "sweep": [4]},
    {"method": "glt-expr", "dimension": 1, "expr": {"op": "D", "a": "x1 +"}, "sweep": [4]},
    {"method": "toeplitz", "dimension": 2, "domain": {"kind": "star"}, "stencil": {"0,0": 1}, "sweep": [4]},
    {"method": "fe-p1", "dimension": 3, "sweep": [4]},
])
def test_config_errors(tmp_path, cfg):
    assert run(tmp_path, cfg, "spectrum") == 2


def test_unreadable_config(tmp_path):
    assert cli.main(["counts", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["counts", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert cli.main(["acs", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_numerical_failure(tmp_path):
    # a non-Hermitian matrix cannot go to the Hermitian eigensolver
    cfg = {"method": "toeplitz", "dimension": 1, "stencil": {"1": 1}, "sweep": [4]}
    assert run(tmp_path, cfg, "spectrum") == 3
    # an empty SW interior is reported as a numerical failure
    sw = {"method": "shortley-weller", "dimension": 2, "sweep": [4],
          "domain": {"kind": "disk", "center": [0.5, 0.5], "radius": 0.01}}
    assert run(tmp_path, sw, "spectrum", name="sw.json") == 3


def test_deterministic_output(tmp_path):
    cfg = {"method": "shortley-weller", "domain": {"kind": "disk", "center": [0.5, 0.5], "radius": 0.4},
           "sweep": [7, 15], "options": {"symbol_samples": 2000}}
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    codes = [run(d, cfg, "compare") for d in (a, b)]
    assert codes[0] == codes[1]
    for rel in ("out/compare/summary.json", "out/compare/7/report.json", "out/compare/15/report.json"):
        assert (a / rel).read_bytes() == (b / rel).read_bytes()
    for d in (a, b):
        assert run(d, cfg, "spectrum") == 0
    assert (a / "out/spectrum/15/spectrum.csv").read_bytes() == (b / "out/spectrum/15/spectrum.csv").read_bytes()


def test_console_entry_point(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"domain": {"kind": "hypercube", "dimension": 1}, "sweep": [3]}))
    res = subprocess.run([sys.executable, "-m", "rglt.cli", "counts", "--config", str(cfg), "--out",
                          str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "o/counts/counts.csv").exists()


def test_triplet_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    A = rng.standard_normal((6, 6)) * (rng.random((6, 6)) < 0.4)
    write_triplets(tmp_path / "a.txt", A, {"domain": "disk"})
    np.testing.assert_array_equal(read_triplets(tmp_path / "a.txt").toarray(), A)
    lines = (tmp_path / "a.txt").read_text().splitlines()
    rows = [tuple(map(int, ln.split()[:2])) for ln in lines]
    assert rows == sorted(rows) and min(r for r, _ in rows) >= 1
    C = A + 1j * np.eye(6)
    write_triplets(tmp_path / "c.txt", C)
    np.testing.assert_array_equal(read_triplets(tmp_path / "c.txt").toarray(), C)
    assert json.loads((tmp_path / "a.txt.json").read_text()) == {"domain": "disk", "size": 6}
