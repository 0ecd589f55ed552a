import json
import math

import numpy as np
from hypothesis import given, settings, strategies as st

from plapsing import io

finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=20))
def test_profile_csv_round_trips_exactly(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("csv") / "p.csv"
    a = np.array(rows)
    io.write_profile_csv(path, a[:, 0], a[:, 1], a[:, 2])
    back = io.read_csv(path)
    assert list(back) == ["theta", "omega", "omega_theta"]
    assert np.array_equal(back["omega"], a[:, 1])


def test_field_csv_row_major(tmp_path):
    r, th = np.array([0.1, 1.0]), np.array([0.0, 0.5, 1.0])
    u = np.arange(6.0).reshape(2, 3) / 7
    io.write_field_csv(tmp_path / "f.csv", r, th, u)
    back = io.read_csv(tmp_path / "f.csv")
    assert np.array_equal(back["u"], u.ravel())
    assert np.array_equal(back["r"], np.repeat(r, 3))


@settings(max_examples=100, deadline=None)
@given(finite)
def test_json_float_round_trip(x):
    assert json.loads(io.dumps({"x": x}))["x"] == x


def test_json_handles_numpy_and_nonfinite():
    out = json.loads(io.dumps({"a": np.float64(0.1), "b": np.array([1, 2]), "c": math.inf,
                               "d": np.bool_(True)}))
    assert out == {"a": 0.1, "b": [1, 2], "c": "inf", "d": True}


def test_json_is_deterministic():
    assert io.dumps({"b": 1, "a": [0.1, 2]}) == io.dumps({"a": [0.1, 2], "b": 1})
