import json
import math

import numpy as np
import pytest

from qmix import channels as C
from qmix.dobrushin import kappa_analytic, kappa_scalar
from qmix.dynamics import classify, iterate_trajectory
from qmix.operators import basis_state
from qmix.serialization import (
    FormatError,
    channel_from_json,
    channel_to_json,
    classification_to_json,
    dumps,
    kappa_to_json,
    loads,
    operator_from_json,
    operator_to_json,
    trajectory_to_csv,
)


def test_operator_layout_row_major():
    a = np.array([[1 + 2j, 3], [4, 5 - 6j]])
    assert operator_to_json(a) == {"dim": 2, "entries": [[1.0, 2.0], [3.0, 0.0], [4.0, 0.0], [5.0, -6.0]]}


def test_operator_exact_round_trip():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    back = operator_from_json(loads(dumps(operator_to_json(a))))
    np.testing.assert_array_equal(back, a)


@pytest.mark.parametrize("doc", [
    {"dim": 2, "entries": [[1, 0]]},
    {"dim": 0, "entries": []},
    {"dim": "2", "entries": [[0, 0]] * 4},
    {"entries": []},
    {"dim": 1, "entries": [["x", 0]]},
    [1, 2, 3],
])
def test_operator_rejects(doc):
    with pytest.raises(FormatError):
        operator_from_json(doc)


def test_channel_round_trip_keeps_family():
    ch = C.qubit_depolarizing(0.3)
    back = channel_from_json(loads(dumps(channel_to_json(ch))))
    assert back.family == "qubit_depolarizing" and back.params == {"alpha": 0.3}
    for k, b in zip(ch.kraus, back.kraus):
        np.testing.assert_array_equal(k, b)


def test_channel_without_metadata():
    doc = {"dim": 1, "kraus": [{"dim": 1, "entries": [[1.0, 0.0]]}]}
    ch = channel_from_json(doc)
    assert ch.family is None and ch.dim == 1


@pytest.mark.parametrize("doc", [
    {"dim": 2, "kraus": []},
    {"dim": 3, "kraus": [{"dim": 2, "entries": [[1, 0], [0, 0], [0, 0], [1, 0]]}]},
    {"kraus": "nope"},
])
def test_channel_rejects(doc):
    with pytest.raises(FormatError):
        channel_from_json(doc)


def test_truncated_json():
    with pytest.raises(FormatError):
        loads('{"dim": 2, "kraus": [')


def test_kappa_infinite_theta_is_string():
    doc = json.loads(dumps(kappa_to_json(kappa_analytic("omega", dim=2))))
    assert doc["theta"] == "inf"
    assert doc["trace_kappa"] == 1.0
    assert doc["method"] == "analytic"


def test_kappa_scalar_schema():
    doc = kappa_to_json(kappa_scalar(C.qubit_depolarizing(0.3)))
    assert set(doc) >= {"trace_kappa", "theta", "method", "lower_bound", "argmin_state"}
    assert len(doc["argmin_state"]) == 2
    assert math.isclose(doc["theta"], math.log(5 / 3), abs_tol=1e-6)


def test_classification_schema():
    doc = classification_to_json(classify(C.dephasing()))
    assert doc["verdict"] == "non_ergodic"
    assert doc["unit_multiplicity"] == 2
    assert len(doc["eigenvalues"]) == 4
    assert len(doc["fixed_points"]) == 2


def test_trajectory_csv():
    traj = iterate_trajectory(C.qubit_depolarizing(0.3), basis_state(2, 0), 3, np.eye(2) / 2)
    lines = trajectory_to_csv(traj).splitlines()
    assert lines[0] == "n,tv_distance"
    assert len(lines) == 5
    n, val = lines[2].split(",")
    assert n == "1" and float(val) == traj.steps[1].tv_to_reference
    assert len(val.replace(".", "").lstrip("0")) == 17
