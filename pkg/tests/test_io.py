import numpy as np
import pytest

from birdfoot import io
from birdfoot.harness import run_trial
from birdfoot.params import ProtocolParams, preset_configuration
from birdfoot.substrate import substrate_preset


@pytest.fixture(scope="module")
def trial():
    return run_trial(preset_configuration("TJ2SC2"), substrate_preset("pebbles"), ProtocolParams())


def test_trace_round_trip_is_exact(tmp_path, trial):
    trace, _ = trial
    io.write_trace(tmp_path / "t.csv", trace)
    back = io.read_trace(tmp_path / "t.csv")
    for col in io.TRACE_HEADER[1:]:
        assert np.array_equal(getattr(back, col), getattr(trace, col), equal_nan=col != "sliding")
    assert back.metadata == trace.metadata


def test_writes_are_byte_stable(tmp_path, trial):
    trace, _ = trial
    io.write_trace(tmp_path / "a.csv", trace)
    io.write_trace(tmp_path / "b.csv", trace)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_recordings_round_trip(tmp_path, trial):
    trace, _ = trial
    io.export_recordings(trace, tmp_path / "f.csv", tmp_path / "m.csv")
    t, F_h, F_v = io.read_forces(tmp_path / "f.csv")
    mt, markers = io.read_markers(tmp_path / "m.csv")
    assert np.array_equal(F_h, trace.F_h) and np.array_equal(F_v, trace.F_v)
    assert np.array_equal(markers, trace.markers) and np.array_equal(t, mt)
    assert t[1] == pytest.approx(1 / 250)


def test_summary_and_df_tables(tmp_path):
    rows = [["LL1S", "wood", 24.6, 0.41, 0.44, 12.5], ["BF", "sand", None, None, None, None]]
    io.write_summary(tmp_path / "s.csv", rows)
    assert io.read_summary(tmp_path / "s.csv") == [tuple(r) for r in rows]
    io.write_df_table(tmp_path / "d.csv", {"LL1S": 24.6}, {"LL1S": 12.5})
    assert io.read_df_table(tmp_path / "d.csv") == {"LL1S": (24.6, 12.5)}


def test_bad_number_names_row_and_column(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("t,F_h,F_v\n0.0,1.0,2.0\n0.004,abc,2.0\n")
    with pytest.raises(io.ParseError, match=r"row 3, column F_h"):
        io.read_forces(p)


def test_missing_column_is_named(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("t,F_h\n0.0,1.0\n")
    with pytest.raises(io.ParseError, match="missing column.*F_v"):
        io.read_forces(p)


def test_truncated_file_names_the_row(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text(",".join(io.MARKER_HEADER) + "\n" + ",".join(["0.0"] * 9) + "\n0.004,0.1,0.2\n")
    with pytest.raises(io.ParseError, match=r"row 3: expected 9 fields, got 3"):
        io.read_markers(p)


def test_time_must_increase(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("t,F_h,F_v\n0.0,1,2\n0.0,1,2\n")
    with pytest.raises(io.ParseError, match=r"row 3, column t"):
        io.read_forces(p)


def test_empty_file(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("")
    with pytest.raises(io.ParseError, match="empty"):
        io.read_forces(p)
