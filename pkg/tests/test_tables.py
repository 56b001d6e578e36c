import json
import math

import pytest

from bilinear_comparison.estimators import adjusted_value
from bilinear_comparison.tables import (SCHEMA_VERSION, TABLE_PRESETS, TABLE_T, format_csv,
                                        reproduce_table)


@pytest.fixture(scope="module")
def quick_table_1():
    return reproduce_table(1, n_samples=4096, step=0.05)


@pytest.fixture(scope="module")
def quick_table_5():
    return reproduce_table(5, n_samples=4096, step=0.05)


def test_presets():
    assert {k: (p.beta, p.s) for k, p in TABLE_PRESETS.items()} == {
        1: (3.0, 1.0), 2: (3.0, -1.0), 3: (10.0, 1.0), 4: (10.0, -1.0),
        5: (10.0, 1.0), 6: (10.0, -1.0)}
    assert TABLE_PRESETS[5].n_samples == 80_000 and TABLE_PRESETS[6].n_samples == 50_000
    assert TABLE_PRESETS[5].c3 == 0.1 and TABLE_PRESETS[6].c3s == 1.0
    assert [p.with_limit for p in TABLE_PRESETS.values()] == [False, False] + [True] * 4


def test_plain_table_structure(quick_table_1):
    r = quick_table_1
    assert r.t == TABLE_T
    assert r.columns == ("dpsi_standard", "dpsi_closed", "psi_int_standard", "psi_int_closed",
                         "psi_direct")
    for col in r.columns:
        assert len(r.values[col]) == 9 and len(r.errors[col]) == 9
    assert all(v < 0 for v in r.values["dpsi_closed"])
    assert r.values["psi_direct"][0] == pytest.approx(1.4514, abs=0.03)


def test_lifted_table_has_limit_and_adjusted_columns(quick_table_5):
    r = quick_table_5
    assert "psistar_limit" in r.columns
    adj = [c for c in r.columns if c.endswith("_adj")]
    assert adj == ["psistar_int_standard_adj", "psistar_int_closed_adj", "psistar_direct_adj",
                   "psistar_limit_adj"]
    for col in adj:
        assert col not in r.errors
        base = col[:-4]
        for v, a in zip(r.values[base], r.values[col]):
            assert abs(adjusted_value(v, 10.0, 1.0, 0.1, 5) - a) <= 1e-12


def test_csv_layout(quick_table_5):
    text = quick_table_5.to_csv()
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    assert meta["schema"] == SCHEMA_VERSION and meta["seed"] == 2016 and meta["table"] == 5
    header = lines[1].split(",")
    assert header == meta["columns"]
    assert header[:3] == ["t", "dpsistar_standard", "dpsistar_standard_se"]
    assert len(lines) == 2 + 9
    for line in lines[2:]:
        cells = [float(c) for c in line.split(",")]
        assert len(cells) == len(header) and all(math.isfinite(c) for c in cells)


def test_table_is_deterministic(quick_table_1):
    again = reproduce_table(1, n_samples=4096, step=0.05, workers=4)
    assert again.to_csv() == quick_table_1.to_csv()


def test_table_validation():
    with pytest.raises(ValueError, match="table"):
        reproduce_table(7)


def test_format_csv_precision_and_nan():
    text = format_csv({"seed": 1}, ["t", "v"], [[0.5, 1 / 3]], precision=3)
    assert text.splitlines()[2] == "0.5,0.333"
    with pytest.raises(FloatingPointError):
        format_csv({}, ["t", "v"], [[0.5, float("nan")]])
    with pytest.raises(ValueError):
        format_csv({}, ["t", "v"], [[0.5]])
