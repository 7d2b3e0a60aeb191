import math

from empbern.serialization import csv_text, dumps, loads, read_csv_rows


def test_dumps_roundtrip():
    obj = {"a": 0.1, "b": [1, 2.5, math.inf], "c": True, "d": None, "e": "x"}
    back = loads(dumps(obj))
    assert back["a"] == 0.1 and back["b"][2] == math.inf and back["c"] is True
    assert dumps(1 / 3) == "0.33333333333333331"
    assert math.isnan(loads(dumps(math.nan)))


def test_csv_roundtrip(tmp_path):
    rows = [{"x": 1 / 3, "ok": True}, {"x": 2.0, "ok": False, "y": "z"}]
    path = tmp_path / "t.csv"
    path.write_text(csv_text(rows, header_lines=["hello"]))
    assert path.read_text().startswith("# hello\nx,ok,y\n")
    back = read_csv_rows(path)
    assert float(back[0]["x"]) == 1 / 3 and back[1]["y"] == "z"
