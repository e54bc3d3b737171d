import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fourbody import io
from fourbody.cli import build_parser, config_from_args, main, parse_tolerance
from fourbody.extraction import CLASSES
from fourbody.external import build_external_state
from fourbody.internal import PAIRS, pair_overlaps, random_ensemble

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def run(*argv):
    return main([str(a) for a in argv])


def load(path):
    return json.loads(Path(path).read_text())


def test_simulate_fixture_tables(tmp_path, capsys):
    out = tmp_path / "d.json"
    assert run("simulate", FIXTURES / "distinguishable.json", "-o", out) == 0
    per_class = load(out)["per_class"]
    expect = {"F1_I": 1 / 64, "F1_II": 3 / 64, "A_A": 3 / 32, "A_B": 1 / 256, "A_1": 3 / 128}
    for k, v in expect.items():
        assert per_class[k] == pytest.approx(v, abs=1e-15)
    assert "normalization residual" in capsys.readouterr().err
    assert run("simulate", FIXTURES / "ideal_boson.json", "-o", out) == 0
    per_class = load(out)["per_class"]
    assert all(per_class[c.value] == 0 for c in CLASSES if c.value.startswith("F"))
    assert run("simulate", FIXTURES / "ideal_fermion.json", "-o", out) == 0
    assert load(out)["per_class"]["A_A"] == pytest.approx(1.0)


def test_extract_fixtures(tmp_path):
    stats, rep = tmp_path / "s.json", tmp_path / "r.json"
    run("simulate", FIXTURES / "ideal_boson.json", "-o", stats)
    assert run("extract", stats, "-o", rep) == 0
    q = load(rep)["quantifiers"]
    assert [q[k] for k in ("I_112", "I_13", "I_22", "I_4")] == pytest.approx([6, 8, 3, 6], abs=1e-12)
    run("simulate", FIXTURES / "distinguishable.json", "-o", stats)
    assert run("extract", stats, "-o", rep) == 0
    data = load(rep)
    assert all(abs(v) < 1e-13 for v in data["quantifiers"].values())
    for pair in data["pairs"]:
        assert pair["values"] == pytest.approx([0, 0], abs=1e-12)
        assert pair["status"] == "ambiguous" and pair["assignment"] is None


def test_marked_run_files_resolve_all_pairs(tmp_path):
    stats = tmp_path / "s.json"
    run("simulate", FIXTURES / "random_pure.json", "-o", stats, "--mark", 1, "--mark", 2, "--mark", 3, "--mark", 4)
    data = load(stats)
    files = []
    for item in data.pop("marked_runs"):
        path = tmp_path / f"m{item['marked']}.json"
        path.write_text(json.dumps(item))
        files += ["--marked-run", path]
    main_only = tmp_path / "main.json"
    main_only.write_text(json.dumps(data))
    rep = tmp_path / "r.json"
    assert run("extract", main_only, "-o", rep, *files) == 0
    report = load(rep)
    ens = io.ensemble_from_json(load(FIXTURES / "random_pure.json"))
    truth = pair_overlaps(ens)
    assert not report["ambiguous"]
    assert all(p["status"] == "resolved" for p in report["pairs"])
    for a, b in PAIRS:
        assert report["pair_overlaps"][f"({a} {b})"] == pytest.approx(truth[a, b], abs=1e-9)


def test_reconstruct_pipeline(tmp_path):
    stats, rep, rec = tmp_path / "s.json", tmp_path / "r.json", tmp_path / "x.json"
    marks = [a for m in (1, 2, 3, 4) for a in ("--mark", m)]
    run("simulate", FIXTURES / "random_pure.json", "-o", stats, *marks)
    assert run("extract", stats, "-o", rep) == 0
    assert run("reconstruct", rep, "-o", rec) == 0
    out = load(rec)
    assert out["residuals"]["statistics"] <= 1e-8
    ens = io.ensemble_from_json(load(FIXTURES / "random_pure.json"))
    truth = build_external_state(ens).matrix
    got = np.array(out["external_state"]["matrix"])
    got = got[..., 0] + 1j * got[..., 1]
    assert min(np.linalg.norm(got - truth), np.linalg.norm(got.conj() - truth)) <= 1e-8


def test_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"states": 3}')
    assert run("simulate", bad) == 2
    bad.write_text("not json")
    assert run("extract", bad) == 2
    assert run("simulate", tmp_path / "missing.json") == 2

    stats = tmp_path / "s.json"
    run("simulate", FIXTURES / "distinguishable.json", "-o", stats)
    data = load(stats)
    data["per_class"]["A_A"] *= 3
    for e in data["per_event"]:
        if e["class"] == "A_A":
            e["p"] *= 3
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(data))
    assert run("extract", broken) == 3

    rep = tmp_path / "r.json"
    run("extract", stats, "-o", rep)
    assert run("reconstruct", rep) == 4  # pairs ambiguous

    mixed = tmp_path / "mixed.json"
    ens = random_ensemble(np.random.default_rng(0), 3, False)
    mixed.write_text(io.dumps(io.ensemble_to_json(ens, "mixed")))
    marks = [a for m in (1, 2, 3, 4) for a in ("--mark", m)]
    run("simulate", mixed, "-o", stats, *marks)
    run("extract", stats, "-o", rep)
    assert run("reconstruct", rep) == 4

    assert run("verify", FIXTURES / "distinguishable.json", "--unitary", "random", "--seed", 3) == 5


def test_verify_passes(tmp_path):
    out = tmp_path / "v.json"
    for name in ("distinguishable", "ideal_boson", "ideal_fermion", "random_pure"):
        assert run("verify", FIXTURES / f"{name}.json", "-o", out) == 0
        assert load(out)["passed"]


def test_verify_random_unitary_fails_symmetry(tmp_path):
    out = tmp_path / "v.json"
    assert run("verify", FIXTURES / "random_pure.json", "--unitary", "random", "-o", out) == 5
    checks = {c["name"]: c["passed"] for c in load(out)["checks"]}
    assert checks["class symmetry"] is False
    assert checks["closed form vs full sum"] is False


def test_byte_identical_reruns(tmp_path):
    stats = tmp_path / "s.json"
    run("simulate", FIXTURES / "random_pure.json", "-o", stats, "--mark", 2)
    outputs = []
    for k in range(2):
        shots, rep = tmp_path / f"c{k}.json", tmp_path / f"r{k}.json"
        assert run("sample", stats, "--shots", 20000, "--seed", 9, "-o", shots) == 0
        assert run("extract", shots, "-o", rep) == 0
        outputs.append((shots.read_bytes(), rep.read_bytes()))
    assert outputs[0] == outputs[1]
    record = load(tmp_path / "c0.json")
    assert record["shots"] == 20000 and record["seed"] == 9
    assert sum(c["n"] for c in record["counts"]) == 20000


def test_csv_output(tmp_path):
    out = tmp_path / "s.csv"
    assert run("simulate", FIXTURES / "ideal_boson.json", "-o", out, "--format", "csv") == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "class,size,p"
    assert len(lines) == 12
    assert lines[7].startswith("A_A,1,0.25")


def test_config_and_tolerances():
    assert parse_tolerance(["tol_cos=1e-5"]).tol_cos == 1e-5
    with pytest.raises(io.SchemaError):
        parse_tolerance(["nonsense=1"])
    with pytest.raises(io.SchemaError):
        parse_tolerance(["tol_cos"])
    args = build_parser().parse_args(["sample", "x.json", "--shots", "0"])
    with pytest.raises(io.SchemaError):
        config_from_args(args)
    args = build_parser().parse_args(["simulate", "x.json", "--mark", "7"])
    with pytest.raises(io.SchemaError):
        config_from_args(args)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "fourbody", "simulate", str(FIXTURES / "ideal_fermion.json")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["per_class"]["A_A"] == pytest.approx(1.0)
