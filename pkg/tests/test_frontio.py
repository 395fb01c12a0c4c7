import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mosqp.frontio import FrontParseError, format_csv, infer_format, read_front, write_front
from mosqp.pareto import Front

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def sample_front(name="problem1"):
    x = np.array([[0.1, -0.2], [1 / 3, 2 / 7]])
    return Front(x, np.array([[1.0, 2.0], [np.pi, np.e]]), name)


class TestRoundTrip:
    @pytest.mark.parametrize("suffix", ["csv", "json"])
    def test_bit_identical(self, tmp_path, suffix):
        fr = sample_front()
        path = tmp_path / f"front.{suffix}"
        write_front(fr, path)
        back = read_front(path)
        np.testing.assert_array_equal(back.x, fr.x)
        np.testing.assert_array_equal(back.f, fr.f)
        assert back.problem_name == "problem1"

    @settings(max_examples=50, deadline=None)
    @given(x=arrays(np.float64, (3, 2), elements=finite), f=arrays(np.float64, (3, 2), elements=finite))
    def test_random_values(self, tmp_path_factory, x, f):
        path = tmp_path_factory.mktemp("rt") / "f.csv"
        write_front(Front(x, f, "p"), path)
        back = read_front(path)
        np.testing.assert_array_equal(back.x, x)
        np.testing.assert_array_equal(back.f, f)

    @pytest.mark.parametrize("suffix", ["csv", "json"])
    def test_max_sign(self, tmp_path, suffix):
        fr = sample_front("mop3")
        path = tmp_path / f"front.{suffix}"
        write_front(fr, path, maximize=True)
        text = path.read_text()
        assert ("sign=max" in text) if suffix == "csv" else (json.loads(text)["sign"] == "max")
        back = read_front(path)
        np.testing.assert_array_equal(back.f, fr.f)

    def test_csv_layout(self):
        lines = format_csv(sample_front()).splitlines()
        assert lines[0] == "# problem=problem1"
        assert lines[1] == "x1,x2,f1,f2"
        assert lines[3].split(",")[0] == "0.33333333333333331"

    def test_json_schema(self, tmp_path):
        path = tmp_path / "f.json"
        write_front(sample_front(), path, config={"seed": 1}, counters={"objectives": 5})
        doc = json.loads(path.read_text())
        assert set(doc) == {"problem", "sign", "config", "points", "counters"}
        assert doc["points"][0] == {"x": [0.1, -0.2], "f": [1.0, 2.0]}

    def test_empty_front(self, tmp_path):
        path = tmp_path / "e.csv"
        write_front(Front(np.zeros((0, 2)), np.zeros((0, 2)), "p"), path)
        assert len(read_front(path)) == 0


class TestErrors:
    def test_bad_field_count(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1,f1,f2\n1,2,3\n1,2\n")
        with pytest.raises(FrontParseError) as err:
            read_front(path)
        assert err.value.line == 3 and "bad.csv:3" in str(err.value)

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# problem=p\nx1,f1,f2\n1,abc,3\n")
        with pytest.raises(FrontParseError) as err:
            read_front(path)
        assert err.value.line == 3

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(FrontParseError, match="header"):
            read_front(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(FrontParseError):
            read_front(path)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"points": [\n{"x": [1], "f": }]}')
        with pytest.raises(FrontParseError) as err:
            read_front(path)
        assert err.value.line == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(FrontParseError):
            read_front(tmp_path / "nope.csv")


def test_infer_format():
    assert infer_format("a.JSON") == "json"
    assert infer_format("a.txt") == "csv"
    assert infer_format("a.csv", "json") == "json"
    with pytest.raises(ValueError):
        infer_format("a.csv", "xml")
