import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from algrand.records import (
    CSV_FIELDS,
    ResultRecord,
    fmt_real,
    read_csv_summary,
    read_results,
    write_results,
)


def rec(i, test="borel", value=0.25, **kw):
    return ResultRecord(generator="mt", index=i, orientation="original", test=test, value=value, **kw)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_real_roundtrips(v):
    assert float(fmt_real(v)) == v


def test_fmt_real_other_types():
    assert fmt_real(None) == ""
    assert fmt_real(True) == "true"
    assert fmt_real(12) == "12"


def test_roundtrip(tmp_path):
    records = [
        rec(0, value=0.1 + 0.2, detail={"per_m_deviation": {"1": 0.5}}),
        rec(0, test="csss4", value=7, detail={"repetitions": 26214}),
        rec(1, value=None, error="IncompleteRun: out of bits"),
    ]
    n = write_results(tmp_path / "r.jsonl", {"suite_version": "x"}, records, csv_path=tmp_path / "r.csv")
    assert n == 3
    back = read_results(tmp_path / "r.jsonl")
    assert back.header["suite_version"] == "x"
    assert back.records == records
    assert back.tests == {"borel", "csss4"}


def test_csv_matches_jsonl(tmp_path):
    records = [rec(i, value=i / 7) for i in range(5)] + [rec(0, test="csss4", value=3, detail={"repetitions": 9})]
    write_results(tmp_path / "r.jsonl", {}, records, csv_path=tmp_path / "r.csv")
    rows = read_csv_summary(tmp_path / "r.csv")
    assert tuple(rows[0].keys()) == CSV_FIELDS
    for row, r in zip(rows, read_results(tmp_path / "r.jsonl").records):
        assert float(row["value"]) == r.value
        assert row["test"] == r.test and int(row["index"]) == r.index
    assert rows[-1]["repetitions"] == "9"


def test_duplicate_key_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_results(tmp_path / "r.jsonl", {}, [rec(0), rec(0)])


def test_header_line_first(tmp_path):
    write_results(tmp_path / "r.jsonl", {"a": 1}, [rec(0)])
    first = json.loads((tmp_path / "r.jsonl").read_text().splitlines()[0])
    assert first["record"] == "header" and first["a"] == 1


def test_missing_header(tmp_path):
    p = tmp_path / "r.jsonl"
    p.write_text(rec(0).to_json() + "\n")
    with pytest.raises(ValueError):
        read_results(p)


def test_malformed_line(tmp_path):
    p = tmp_path / "r.jsonl"
    p.write_text('{"record": "header"}\nnot json\n')
    with pytest.raises(ValueError):
        read_results(p)
