import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavelattice.config import preset
from wavelattice.diagnostics import DiagnosticsRecord
from wavelattice.integrator import run
from wavelattice.io import (
    RunManifest,
    emit_series,
    is_manifest,
    load_snapshot,
    parse_series,
    read_series,
    snapshot_dict,
    snapshot_json,
    write_series,
)
from wavelattice.state import build_initial

from conftest import small_config

finite = st.floats(allow_nan=False, allow_infinity=False)


def test_empty_series_is_header_only():
    text = emit_series([], header=["t", "positive_mass"])
    assert text == "t,positive_mass\n"
    assert parse_series(text) == []


def test_one_record_two_lines():
    rec = DiagnosticsRecord(0.0, {"positive_mass": np.array([1.0, 2.0])})
    text = emit_series([rec])
    assert text.splitlines() == ["t,positive_mass", "0,2"]


def test_columns_and_shell_columns_last():
    records = run(small_config(t_end=0.2)).records
    header = emit_series(records).splitlines()[0].split(",")
    assert header[:2] == ["t", "positive_mass"]
    shells = [h for h in header if h.startswith("shell_xi_pow_")]
    assert shells and header[-len(shells):] == shells


def test_round_trip_of_a_run():
    records = run(small_config(t_end=0.3, n_dir=3, angular_profile="sinusoidal")).records
    text = emit_series(records)
    back = parse_series(text)
    assert back == [r.reduced() for r in records]
    assert emit_series(back) == text


def test_concentration_reduces_by_min():
    rec = DiagnosticsRecord(1.0, {"concentration_xi_pow_1": np.array([0.9, 0.95]),
                                  "condensate": np.array([1.0, 3.0])})
    back = parse_series(emit_series([rec]))[0]
    assert back["concentration_xi_pow_1"][0] == 0.9
    assert back["condensate"][0] == 3.0


@given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=20))
def test_round_trip_exact_floats(rows):
    recs = [DiagnosticsRecord(t, {"a": np.array([a]), "b": np.array([b])}) for t, a, b in rows]
    back = parse_series(emit_series(recs))
    assert back == recs


def test_parse_rejects_bad_input():
    with pytest.raises(ValueError):
        parse_series("x,y\n1,2\n")
    with pytest.raises(ValueError):
        parse_series("t,y\n1\n")


def test_file_helpers(tmp_path):
    records = run(small_config(t_end=0.1)).records
    path = tmp_path / "s.csv"
    write_series(path, records)
    assert read_series(path) == [r.reduced() for r in records]
    with pytest.raises(OSError, match="missing.csv"):
        read_series(tmp_path / "missing.csv")


def test_snapshot_schema():
    cfg = small_config(n_dir=2, rho_max=1)
    doc = snapshot_dict(build_initial(cfg))
    assert set(doc) == {"xi", "time", "directions"}
    assert doc["xi"] == 3 and doc["time"] == 0.0
    d0 = doc["directions"][0]
    assert set(d0) == {"angle", "shells", "condensate", "overflow_mass", "overflow_energy"}
    assert d0["shells"] == [{"m": 1, "eta": 1, "amp": 1.0}, {"m": 1, "eta": 0, "amp": 1.0}]
    assert doc["directions"][1]["angle"] == pytest.approx(np.pi)


def test_snapshot_round_trip():
    cfg = small_config(n_dir=3, rho_max=3, angular_profile="random-band", t_end=0.2)
    final = run(cfg).final
    text = snapshot_json(final)
    back = load_snapshot(text, cfg)
    assert back.time == final.time
    assert [d.shells for d in back.directions] == [d.shells for d in final.directions]
    np.testing.assert_array_equal(back.condensate, final.condensate)
    np.testing.assert_array_equal(back.overflow_energy, final.overflow_energy)
    assert snapshot_json(back) == text


def test_snapshot_xi_mismatch():
    text = snapshot_json(build_initial(small_config()))
    with pytest.raises(ValueError, match="xi"):
        load_snapshot(text, small_config(xi=5))


def test_manifest_round_trip():
    m = RunManifest(preset("radial"), 0, "radial", "out")
    m.add("series_csv", "out/series.csv")
    doc = json.loads(json.dumps(m.to_dict()))
    assert is_manifest(doc)
    back = RunManifest.from_dict(doc)
    assert back.config == m.config
    assert back.emitted_files == [{"kind": "series_csv", "path": "out/series.csv"}]
    assert not is_manifest({"xi": 3})
