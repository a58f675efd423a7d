import csv
import json
import subprocess
import sys

import pytest

from ldanneal.cli import main
from ldanneal.instances import read_instance
from ldanneal.samplers import exact_enumerate
from ldanneal.spin_model import energy, from_bits
from oracles import brute_spectrum

THREE = "# three sites\n3\n0 1 -1\n1 2 0.5\n0 0 0.2\n"


@pytest.fixture
def three_file(tmp_path):
    p = tmp_path / "three.txt"
    p.write_text(THREE)
    return p


def _strip_wall(doc):
    for r in doc["records"]:
        r.pop("wall_time")
    return doc


def _rows(text):
    return list(csv.reader(text.splitlines()))


def test_solve_exact_three_site(three_file, tmp_path):
    out = tmp_path / "r.json"
    assert main(["solve", str(three_file), "--sampler", "exact", "--n-samples", "8", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1
    assert doc["best_energy"] == pytest.approx(-1.7)
    assert doc["best_bits"] == "100"
    assert doc["instance"]["n_sites"] == 3


def test_solve_from_given_initial(three_file, tmp_path):
    init = tmp_path / "init.txt"
    init.write_text("011\n")
    out = tmp_path / "r.json"
    args = ["solve", str(three_file), "--sampler", "exact", "--n-samples", "8", "--cycles", "0",
            "--initial", str(init), "--out", str(out)]
    assert main(args) == 0
    doc = json.loads(out.read_text())
    assert doc["best_energy"] == pytest.approx(-1.3)
    assert doc["records"][0]["stage"] == "init"


def test_solve_json_byte_identical(tmp_path):
    inst = tmp_path / "tri.txt"
    assert main(["generate", "--rows", "3", "--cols", "4", "--seed", "5", "--out", str(inst)]) == 0
    texts = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        traj = tmp_path / f"t{k}.csv"
        args = ["solve", str(inst), "--sweeps", "30", "--n-samples", "12", "--seed", "9",
                "--out", str(out), "--trajectory", str(traj)]
        assert main(args) == 0
        texts.append(json.dumps(_strip_wall(json.loads(out.read_text())), indent=2, sort_keys=True))
    assert texts[0] == texts[1]
    assert (tmp_path / "t0.csv").read_bytes() == (tmp_path / "t1.csv").read_bytes()
    rows = _rows((tmp_path / "t0.csv").read_text())
    assert rows[0] == ["stage", "cycle", "iteration", "budget", "best_energy", "sample_energy"]
    best = [float(r[4]) for r in rows[1:]]
    assert all(a >= b for a, b in zip(best, best[1:]))


def test_generate_directory_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["generate", "--rows", "3", "--cols", "3", "--count", "3", "--seed", "2", "--out", str(d)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["instance_000.txt", "instance_001.txt", "instance_002.txt"]
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()
    assert read_instance(a / names[0]).n_sites == 9


def test_generate_from_topology(tmp_path):
    topo = tmp_path / "g.txt"
    topo.write_text("4\n0 1\n1 2\n2 3\n")
    out = tmp_path / "i.txt"
    assert main(["generate", "--topology", str(topo), "--values", "1", "--out", str(out)]) == 0
    inst = read_instance(out)
    assert inst.couplers == {(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0}


def test_sample_csv(three_file, capsys):
    assert main(["sample", str(three_file), "--sampler", "exact", "--num-reads", "8"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0] == ["bits", "energy"]
    assert [float(r[1]) for r in rows[1:]] == pytest.approx(sorted(brute_spectrum(read_instance(three_file))))


def test_spectrum_driver_off_is_classical(three_file, tmp_path):
    out = tmp_path / "s.csv"
    assert main(["spectrum", str(three_file), "--gamma", "0", "--levels", "8", "--points", "3",
                 "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert rows[0] == ["t_fraction", "level", "energy", "ratio"]
    assert len(rows) == 1 + 3 * 8
    want = exact_enumerate(read_instance(three_file), 8).energies
    for t in ("0.0", "0.5", "1.0"):
        got = [float(r[2]) for r in rows[1:] if r[0] == t]
        assert max(abs(g - w) for g, w in zip(got, want)) <= 1e-10


def test_spectrum_schedule_syntax(three_file, capsys):
    assert main(["spectrum", str(three_file), "--gamma", "0:2,0.5:1,1:0", "--points", "2", "--levels", "2"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 5


def test_evolve_csv_and_shots(three_file, capsys):
    assert main(["evolve", str(three_file), "--anneal-time", "2", "--shots", "10", "--seed", "1"]) == 0
    text = capsys.readouterr().out
    probs, shots = text.split("\n\n")
    rows = _rows(probs)
    assert rows[0] == ["bits", "energy", "probability"]
    assert sum(float(r[2]) for r in rows[1:]) == pytest.approx(1.0, abs=1e-9)
    assert len(_rows(shots)) == 11


def test_evolve_reverse_from_bits(three_file, capsys):
    args = ["evolve", str(three_file), "--gamma", "0", "--initial", "100", "--anneal-time", "3"]
    assert main(args) == 0
    rows = _rows(capsys.readouterr().out)
    p = {r[0]: float(r[2]) for r in rows[1:]}
    assert p["100"] == pytest.approx(1.0, abs=1e-12)


def test_bench_schema(tmp_path):
    d = tmp_path / "inst"
    assert main(["generate", "--rows", "3", "--cols", "3", "--count", "2", "--out", str(d)]) == 0
    csv_out, json_out = tmp_path / "b.csv", tmp_path / "b.json"
    args = ["bench", str(d), "--seeds", "0,1", "--sweeps", "20", "--cycles", "1", "--n-samples", "10",
            "--csv", str(csv_out), "--json", str(json_out)]
    assert main(args) == 0
    rows = _rows(csv_out.read_text())
    assert rows[0] == ["instance", "method", "seed", "final_energy", "budget", "elapsed", "best_bits"]
    body = rows[1:]
    assert len(body) == 2 * 2 * 2
    keys = [(r[0], r[1], r[2]) for r in body]
    assert keys == sorted(keys)
    doc = json.loads(json_out.read_text())
    assert doc["schema_version"] == 1 and len(doc["rows"]) == 8
    for r in doc["rows"]:
        inst = read_instance(d / r["instance"])
        assert r["final_energy"] == energy(inst, from_bits(r["best_bits"]))
    by = {(r["instance"], r["seed"]): {} for r in doc["rows"]}
    for r in doc["rows"]:
        by[(r["instance"], r["seed"])][r["method"]] = r["budget"]
    # plain SA gets exactly the sweeps the LDA run used
    assert all(v["lda"] == v["sa"] for v in by.values())


def test_exit_codes(three_file, tmp_path, capsys):
    assert main([]) == 1
    assert main(["solve", str(three_file), "--no-such-flag"]) == 1
    assert main(["solve", str(tmp_path / "missing.txt")]) == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("3\n0 1 -1\n2 1 0.5\n")
    assert main(["solve", str(bad)]) == 2
    assert "line 3" in capsys.readouterr().err
    big = tmp_path / "big.txt"
    big.write_text("30\n0 1 -1\n")
    assert main(["solve", str(big), "--sampler", "exact"]) == 3
    assert main(["spectrum", str(big)]) == 3
    assert main(["evolve", str(three_file), "--initial", "10"]) == 1
    assert main(["generate", "--out", str(tmp_path / "x.txt")]) == 1


def test_module_entry_point(three_file):
    res = subprocess.run([sys.executable, "-m", "ldanneal", "sample", str(three_file), "--sampler", "exact",
                          "--num-reads", "1"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[1] == "100,-1.7"
