import json

import pytest

from deanwords import reproduce
from deanwords.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_count(capsys):
    code, out, _ = run(capsys, "count", "--n", "5")
    assert code == 0 and out.strip() == "1:4 2:8 3:16 4:24 5:40"


def test_longest_with_forbidden_factor(capsys):
    code, out, _ = run(capsys, "longest", "--forbid", "10")
    assert code == 0
    head, witness = out.strip().splitlines()
    assert head == "EXHAUSTED max_length=58" and len(witness) == 58 and "10" not in witness


def test_enumerate_json(capsys):
    code, out, _ = run(capsys, "enumerate", "--n", "3", "--json")
    rep = json.loads(out)
    assert code == 0 and len(rep["result"]["words"]) == 16
    assert set(rep) >= {"command", "inputs", "result", "verdict", "node_count", "wall_time_ms", "memory_peak_kb"}


def test_check_word_verdicts(capsys):
    code, out, _ = run(capsys, "check-word", "0103212", "--dean", "--probe-margin", "0")
    assert code == 0
    code, _, _ = run(capsys, "check-word", "0101", "--dean")
    assert code == 1


def test_check_morphism(capsys):
    assert run(capsys, "check-morphism", "g", "--criterion", "currie")[0] == 0
    assert run(capsys, "check-morphism", "g", "--criterion", "crochemore")[0] == 1


def test_morphism_file(tmp_path, capsys):
    f = tmp_path / "t.morph"
    f.write_text("alphabet 3 -> 3\n0 -> 01201\n1 -> 020121\n2 -> 0212021\n")
    assert run(capsys, "check-morphism", str(f), "--criterion", "crochemore")[0] == 0
    f.write_text("alphabet 3 -> 3\n0 -> 012\n")
    assert run(capsys, "check-morphism", str(f), "--criterion", "crochemore")[0] == 2


def test_bad_constraints_file_is_usage_error(tmp_path, capsys):
    f = tmp_path / "c.json"
    f.write_text('{"colour": "red"}')
    code, _, err = run(capsys, "count", "--n", "3", "--constraints-file", str(f))
    assert code == 2 and "error" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["count"])
    assert exc.value.code == 2


def test_node_budget_exit_3(monkeypatch, capsys):
    monkeypatch.setenv("DEAN_NODE_BUDGET", "100")
    code, _, err = run(capsys, "count", "--n", "20")
    assert code == 3 and "budget" in err


def test_state_budget_exit_3(monkeypatch, capsys):
    monkeypatch.setenv("DEAN_STATE_BUDGET", "100")
    assert run(capsys, "growth", "lower", "--p", "12")[0] == 3


def test_growth_certificate_round_trip(tmp_path, capsys):
    cert = tmp_path / "cert.txt"
    assert run(capsys, "growth", "lower", "--p", "10", "--cert-file", str(cert))[0] == 0
    assert run(capsys, "growth", "certify", "--p", "10", "--cert-file", str(cert))[0] == 0
    lines = cert.read_text().splitlines()
    lines = [("alpha 2/1" if l.startswith("alpha") else l) for l in lines]
    cert.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "growth", "certify", "--p", "10", "--cert-file", str(cert))
    assert code == 1


def test_catalog(capsys):
    code, out, _ = run(capsys, "catalog", "list")
    assert code == 0 and "dean_f" in out
    code, out, _ = run(capsys, "catalog", "show", "g", "--json")
    assert code == 0 and json.loads(out)["result"]["name"] == "g"
    assert run(capsys, "catalog", "show", "nope")[0] == 2


def _strip_timing(line):
    d = json.loads(line)
    for k in ("wall_time_ms", "memory_peak_kb"):
        d.pop(k)
    return d


def test_reproduce_is_deterministic(capsys):
    argv = ["reproduce", "--only", "table1", "norep", "appendix", "--json"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv, "--workers", "2")
    ra = [_strip_timing(l) for l in a.splitlines()]
    rb = [_strip_timing(l) for l in b.splitlines()]
    assert len(ra) == 3 and ra == rb
    assert all(r["verdict"] == "PASS" for r in ra)


def test_reproduce_items_have_unique_keys():
    keys = [i.key for i in reproduce.ITEMS]
    assert len(keys) == len(set(keys))
