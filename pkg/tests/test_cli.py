import json
import math
import subprocess
import sys

import pytest

from qmix import channels as C
from qmix.cli import main
from qmix.serialization import channel_to_json, dumps, operator_to_json


def run(*args, stdin=None):
    return subprocess.run([sys.executable, "-m", "qmix", *args], input=stdin,
                          capture_output=True, text=True)


@pytest.fixture
def write_channel(tmp_path):
    def _write(ch, name="ch.json"):
        path = tmp_path / name
        path.write_text(dumps(channel_to_json(ch)))
        return str(path)
    return _write


def zoo_json(capsys, *args):
    assert main(["zoo", *args]) == 0
    return json.loads(capsys.readouterr().out)


class TestZoo:
    def test_omega(self, capsys):
        doc = zoo_json(capsys, "omega", "--dim", "3")
        assert doc["dim"] == 3 and len(doc["kraus"]) == 9

    def test_depolarizing(self, capsys):
        doc = zoo_json(capsys, "qubit-depolarizing", "--alpha", "0.3")
        assert len(doc["kraus"]) == 4 and doc["params"]["alpha"] == 0.3

    def test_range_error(self, capsys):
        assert main(["zoo", "qubit-depolarizing", "--alpha", "1.5"]) == 2
        assert "alpha" in capsys.readouterr().err

    def test_unknown_family_exits_2(self):
        assert run("zoo", "amplitude-damping").returncode == 2

    @pytest.mark.parametrize("args", [
        ("identity", "--dim", "3"), ("omega", "--dim", "2"), ("qubit-depolarizing", "--alpha", "0.8"),
        ("unistochastic", "--dim", "3", "--seed", "4"), ("unistochastic", "--phases", "0,2.2214"),
        ("mixed-unitary", "--dim", "2", "--count", "4"), ("dephasing",), ("pauli-average",),
        ("random", "--dim", "3", "--seed", "1"),
    ])
    def test_round_trip_into_analyze(self, capsys, tmp_path, args):
        doc = zoo_json(capsys, *args)
        path = tmp_path / "c.json"
        path.write_text(json.dumps(doc))
        assert main(["analyze", str(path), "--restarts", "4", "--trials", "5", "--steps", "5"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["validation"]["passed"]

    def test_convex_from_stdin(self):
        base = run("zoo", "unistochastic", "--dim", "2", "--seed", "1").stdout
        out = run("zoo", "convex-with-omega", "--base", "-", "--alpha", "0.7", stdin=base)
        assert out.returncode == 0
        doc = json.loads(out.stdout)
        assert doc["family"] == "convex_with_omega" and len(doc["kraus"]) == 5


class TestAnalyze:
    def test_depolarizing(self, capsys, write_channel):
        assert main(["analyze", write_channel(C.qubit_depolarizing(0.3))]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["classification"]["verdict"] == "mixing"
        assert rep["kappa"]["theta"] == pytest.approx(math.log(5 / 3), abs=1e-6)
        assert rep["bound_check"]["passed"]

    def test_unistochastic(self, capsys, write_channel):
        assert main(["analyze", write_channel(C.unistochastic(C.random_unitary(2, 0)))]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["classification"]["verdict"] != "mixing"
        assert rep["kappa"]["trace_kappa"] == 0.0
        assert "skipped" in rep["bound_check"]

    def test_analytic_flag(self, capsys, write_channel):
        path = write_channel(C.convex_with_omega(C.random_channel(2, 2, 0), 0.6))
        assert main(["analyze", path, "--analytic", "convex-with-omega"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["kappa"]["method"] == "analytic"
        assert rep["kappa"]["theta"] == pytest.approx(-math.log(0.6), abs=1e-12)

    def test_flags_depolarizing_above_three_quarters(self, capsys, write_channel):
        assert main(["analyze", write_channel(C.qubit_depolarizing(0.9))]) == 0
        out = capsys.readouterr()
        assert json.loads(out.out)["kappa"]["flags"]
        assert "2*alpha/3" in out.err

    def test_truncated_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"dim": 2, "kraus": [')
        assert main(["analyze", str(p)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["analyze", str(tmp_path / "nope.json")]) == 2

    def test_not_cptp(self, capsys, write_channel):
        path = write_channel(C.KrausChannel((2 * C.identity(2).kraus[0],)))
        assert main(["analyze", path]) == 3
        rep = json.loads(capsys.readouterr().out)
        assert rep["validation"]["passed"] is False
        assert rep["validation"]["tp_residual"] == pytest.approx(3 * math.sqrt(2))

    def test_byte_deterministic(self, write_channel):
        path = write_channel(C.random_channel(3, 3, 1))
        a = run("analyze", path, "--seed", "3", "--trials", "5")
        b = run("analyze", path, "--seed", "3", "--trials", "5")
        assert a.returncode == 0 and a.stdout == b.stdout


class TestIterate:
    def test_omega_collapse(self, tmp_path, capsys, write_channel):
        out = tmp_path / "t.csv"
        assert main(["iterate", write_channel(C.omega(3)), "--initial", "1", "--steps", "10",
                     "--out", str(out)]) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "n,tv_distance"
        values = [float(r.split(",")[1]) for r in rows[1:]]
        assert values[0] > 0 and all(v <= 1e-12 for v in values[1:])
        ref = json.loads(capsys.readouterr().out)["reference"]
        assert ref["dim"] == 3

    def test_depolarizing_decay(self, tmp_path, write_channel):
        out = tmp_path / "t.csv"
        assert main(["iterate", write_channel(C.qubit_depolarizing(0.3)), "--initial", "0",
                     "--steps", "20", "--out", str(out)]) == 0
        for row in out.read_text().splitlines()[1:]:
            n, v = row.split(",")
            assert float(v) == pytest.approx(0.6 ** int(n), abs=1e-9)

    def test_initial_state_file(self, tmp_path, write_channel):
        state = tmp_path / "rho.json"
        state.write_text(dumps(operator_to_json([[0.5, 0.5], [0.5, 0.5]])))
        out = tmp_path / "t.csv"
        assert main(["iterate", write_channel(C.qubit_depolarizing(0.5)), "--initial", str(state),
                     "--steps", "3", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 5

    def test_ambiguous_reference(self, tmp_path, capsys, write_channel):
        path = write_channel(C.dephasing())
        assert main(["iterate", path, "--initial", "0", "--steps", "3", "--out", str(tmp_path / "t.csv")]) == 4
        assert len(json.loads(capsys.readouterr().out)["fixed_space_basis"]) == 2

    def test_explicit_reference(self, tmp_path, write_channel):
        ref = tmp_path / "ref.json"
        ref.write_text(dumps(operator_to_json([[1, 0], [0, 0]])))
        out = tmp_path / "t.csv"
        assert main(["iterate", write_channel(C.dephasing()), "--initial", "0", "--steps", "3",
                     "--out", str(out), "--reference", str(ref)]) == 0
        assert all(float(r.split(",")[1]) <= 1e-12 for r in out.read_text().splitlines()[1:])

    def test_bad_basis_index(self, tmp_path, write_channel):
        assert main(["iterate", write_channel(C.omega(2)), "--initial", "5", "--steps", "3",
                     "--out", str(tmp_path / "t.csv")]) == 2


class TestVerifyBound:
    def test_depolarizing(self, capsys, write_channel):
        path = write_channel(C.qubit_depolarizing(0.5))
        assert main(["verify-bound", path, "--trials", "100", "--steps", "50"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["passed"] and not rep["violations"]
        assert rep["theta"] == pytest.approx(math.log(3), abs=1e-6)

    def test_convex_unistochastic(self, capsys, write_channel):
        ch = C.convex_with_omega(C.unistochastic(C.random_unitary(2, 7)), 0.7)
        assert main(["verify-bound", write_channel(ch), "--analytic", "convex_with_omega"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["theta"] == pytest.approx(-math.log(0.7), abs=1e-12)

    def test_unistochastic_refused(self, capsys, write_channel):
        assert main(["verify-bound", write_channel(C.unistochastic(C.random_unitary(2, 1)))]) == 5
        assert "classification" in json.loads(capsys.readouterr().out)

    def test_violation_exit_code(self, write_channel):
        path = write_channel(C.qubit_depolarizing(0.1))
        assert main(["verify-bound", path, "--analytic", "omega", "--trials", "4", "--steps", "4"]) == 1

    def test_invalid_channel(self, write_channel):
        assert main(["verify-bound", write_channel(C.KrausChannel((0.5 * C.identity(2).kraus[0],)))]) == 3
