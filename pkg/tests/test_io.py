import io
from datetime import datetime, timedelta

import numpy as np
import pytest

from ripscan import AlignedSeries, AlignPolicy, BarRecord, FormatSpec, align
from ripscan.anomaly import AnomalyRecord
from ripscan.io import (ShockSpec, SplitMix64, SynthSpec, read_anomaly_csv,
                        read_bars, read_long_bars, read_points_csv,
                        read_wide_csv, synth_generate, write_aligned_csv,
                        write_anomaly_csv, write_plot_data_csv)

T0 = datetime(2010, 5, 3, 9, 0)


def minutes(*offsets):
    return [T0 + timedelta(minutes=m) for m in offsets]


class TestReadBars:
    def test_well_formed(self):
        f = io.StringIO("timestamp,close\n"
                        "2010-05-03 09:00,10.0\n"
                        "2010-05-03 09:01,10.5\n"
                        "2010-05-03 09:02,10.25\n")
        bars = read_bars(f)
        assert len(bars) == 3
        assert bars[1] == BarRecord(minutes(1)[0], 10.5)

    def test_zero_close_names_line(self):
        f = io.StringIO("timestamp,close\n"
                        "2010-05-03 09:00,10.0\n"
                        "2010-05-03 09:01,0.0\n")
        with pytest.raises(ValueError, match="line 3"):
            read_bars(f)

    def test_duplicate_timestamp_rejected(self):
        f = io.StringIO("timestamp,close\n"
                        "2010-05-03 09:00,10.0\n"
                        "2010-05-03 09:00,10.5\n")
        with pytest.raises(ValueError, match="line 3"):
            read_bars(f)

    def test_malformed_row_names_line(self):
        f = io.StringIO("timestamp,close\n"
                        "2010-05-03 09:00,ten\n")
        with pytest.raises(ValueError, match="line 2"):
            read_bars(f)

    def test_missing_column(self):
        with pytest.raises(ValueError, match="close"):
            read_bars(io.StringIO("timestamp,px\n2010-05-03 09:00,1\n"))

    def test_epoch_minutes_format(self):
        spec = FormatSpec(timestamp_format="epoch")
        f = io.StringIO("timestamp,close\n0,5.0\n1,6.0\n")
        bars = read_bars(f, spec)
        assert bars[0].timestamp == datetime(1970, 1, 1, 0, 0)
        assert bars[1].timestamp == datetime(1970, 1, 1, 0, 1)

    def test_custom_columns(self):
        spec = FormatSpec(timestamp_column="t", close_column="px")
        bars = read_bars(io.StringIO("t,px\n2010-05-03 09:00,3.5\n"), spec)
        assert bars[0].close == 3.5


class TestAlign:
    def test_identical_grids_keep_everything(self):
        a = [BarRecord(t, 1.0 + i) for i, t in enumerate(minutes(0, 1, 2))]
        b = [BarRecord(t, 2.0 + i) for i, t in enumerate(minutes(0, 1, 2))]
        s = align({"a": a, "b": b})
        assert len(s) == 3
        assert s.instruments == ["a", "b"]
        np.testing.assert_array_equal(s.closes[:, 0], [1.0, 2.0, 3.0])

    def test_intersection_drops_missing_minute_everywhere(self):
        a = [BarRecord(t, 1.0) for t in minutes(0, 1, 2)]
        b = [BarRecord(t, 2.0) for t in minutes(0, 2)]
        s = align({"a": a, "b": b})
        assert s.timestamps == minutes(0, 2)

    def test_forward_fill_single_gap_retains_row(self):
        a = [BarRecord(t, v) for t, v in zip(minutes(0, 1, 2), (1.0, 1.5, 2.0))]
        b = [BarRecord(t, v) for t, v in zip(minutes(0, 2), (5.0, 6.0))]
        s = align({"a": a, "b": b}, AlignPolicy("ffill", max_gap=5))
        assert s.timestamps == minutes(0, 1, 2)
        np.testing.assert_array_equal(s.closes[:, 1], [5.0, 5.0, 6.0])

    def test_forward_fill_respects_max_gap(self):
        a = [BarRecord(t, 1.0) for t in minutes(0, 1, 2, 3, 4)]
        b = [BarRecord(t, 2.0) for t in minutes(0, 4)]
        s = align({"a": a, "b": b}, AlignPolicy("ffill", max_gap=2))
        assert s.timestamps == minutes(0, 1, 2, 4)

    def test_forward_fill_never_invents_leading_prices(self):
        a = [BarRecord(t, 1.0) for t in minutes(0, 1)]
        b = [BarRecord(minutes(1)[0], 2.0)]
        s = align({"a": a, "b": b}, AlignPolicy("ffill"))
        assert s.timestamps == minutes(1)

    def test_intersection_never_invents_prices(self):
        rng = np.random.default_rng(90)
        bars = {}
        for name in ("a", "b", "c"):
            keep = sorted(rng.choice(30, size=20, replace=False))
            bars[name] = [BarRecord(T0 + timedelta(minutes=int(m)),
                                    float(rng.uniform(1, 2))) for m in keep]
        s = align(bars)
        for col, name in enumerate(s.instruments):
            source = {b.timestamp: b.close for b in bars[name]}
            for i, ts in enumerate(s.timestamps):
                assert s.closes[i, col] == source[ts]

    def test_empty_intersection_rejected(self):
        a = [BarRecord(minutes(0)[0], 1.0)]
        b = [BarRecord(minutes(1)[0], 2.0)]
        with pytest.raises(ValueError, match="empty"):
            align({"a": a, "b": b})

    def test_no_instruments_rejected(self):
        with pytest.raises(ValueError):
            align({})


class TestSynth:
    def test_same_seed_bit_identical(self):
        spec = SynthSpec(length=200, shock=ShockSpec(start=100))
        out1, out2 = io.StringIO(), io.StringIO()
        write_aligned_csv(synth_generate(9, spec), out1)
        write_aligned_csv(synth_generate(9, spec), out2)
        assert out1.getvalue() == out2.getvalue()

    def test_different_seeds_differ(self):
        spec = SynthSpec(length=50)
        a = synth_generate(1, spec).closes
        b = synth_generate(2, spec).closes
        assert not np.array_equal(a, b)

    def test_zero_volatility_constant_prices(self):
        s = synth_generate(5, SynthSpec(length=60, volatility=0.0))
        np.testing.assert_array_equal(s.closes, np.full((60, 3), 100.0))

    def test_shock_trough_depth(self):
        spec = SynthSpec(length=300, volatility=1e-4,
                         shock=ShockSpec(start=150, depth=0.06, duration=36))
        s = synth_generate(123, spec)
        for col in range(3):
            pre = s.closes[149, col]
            trough = s.closes[150:186, col].min()
            assert trough == pytest.approx(0.94 * pre, rel=5e-3)

    def test_shock_lags_shift_per_instrument(self):
        spec = SynthSpec(length=300, volatility=0.0,
                         shock=ShockSpec(start=100, depth=0.06, duration=36,
                                         lags=(0, 2, 4)))
        s = synth_generate(0, spec)
        assert s.closes[100, 0] < 100.0
        assert s.closes[100, 1] == 100.0
        assert s.closes[102, 1] < 100.0
        assert s.closes[103, 2] == 100.0

    def test_rng_is_integer_state_splitmix(self):
        rng = SplitMix64(0)
        # first outputs of the reference splitmix64 stream for seed 0
        assert rng.next_u64() == 0xE220A8397B1DCDAF
        assert rng.next_u64() == 0x6E789E6AA1B965F4

    def test_timestamps_minute_grid(self):
        s = synth_generate(0, SynthSpec(length=10))
        deltas = {b - a for a, b in zip(s.timestamps, s.timestamps[1:])}
        assert deltas == {timedelta(minutes=1)}


class TestAnomalyCsv:
    def _records(self):
        return [
            AnomalyRecord(minutes(0)[0], 1.230000000000001e-08, 1.2e-08,
                          3.4e-17, None),
            AnomalyRecord(minutes(1)[0], 0.1 + 0.2, 0.30000000000000004,
                          1e-300, -12345.6789012345678),
        ]

    def test_header_exact(self):
        buf = io.StringIO()
        write_anomaly_csv(self._records(), buf)
        assert buf.getvalue().splitlines()[0] == "timestamp,y,ema,emvar,z"

    def test_round_trip_lossless(self):
        records = self._records()
        buf = io.StringIO()
        write_anomaly_csv(records, buf)
        back = read_anomaly_csv(io.StringIO(buf.getvalue()))
        assert back == records

    def test_undefined_z_serialized_empty(self):
        buf = io.StringIO()
        write_anomaly_csv(self._records(), buf)
        line = buf.getvalue().splitlines()[1]
        assert line.endswith(",")

    def test_round_trip_random(self):
        rng = np.random.default_rng(91)
        records = []
        for i in range(200):
            z = None if rng.uniform() < 0.3 else float(rng.normal() * 1e6)
            records.append(AnomalyRecord(
                T0 + timedelta(minutes=i), float(rng.uniform(0, 1e-6)),
                float(rng.normal()), abs(float(rng.normal())), z))
        buf = io.StringIO()
        write_anomaly_csv(records, buf)
        assert read_anomaly_csv(io.StringIO(buf.getvalue())) == records


class TestOtherFormats:
    def test_wide_round_trip(self):
        s = synth_generate(3, SynthSpec(length=25))
        buf = io.StringIO()
        write_aligned_csv(s, buf)
        back = read_wide_csv(io.StringIO(buf.getvalue()))
        assert back.timestamps == s.timestamps
        assert back.instruments == s.instruments
        np.testing.assert_array_equal(back.closes, s.closes)

    def test_long_reader_splits_instruments(self):
        f = io.StringIO("timestamp,instrument,close\n"
                        "2010-05-03 09:00,spx,1.0\n"
                        "2010-05-03 09:00,ndx,2.0\n"
                        "2010-05-03 09:01,spx,1.1\n"
                        "2010-05-03 09:01,ndx,2.1\n")
        by_inst = read_long_bars(f)
        assert set(by_inst) == {"spx", "ndx"}
        assert [b.close for b in by_inst["ndx"]] == [2.0, 2.1]

    def test_plot_data_rows(self):
        s = synth_generate(4, SynthSpec(length=5))
        records = [AnomalyRecord(s.timestamps[3], 1e-8, 1e-8, 0.0, 2.5)]
        buf = io.StringIO()
        write_plot_data_csv(s, records, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "timestamp,price,z"
        assert len(lines) == 6
        assert lines[4].endswith(",2.5")
        assert lines[1].endswith(",")

    def test_points_reader_skips_header(self):
        pts = read_points_csv(io.StringIO("x,y\n0,0\n1,0\n"))
        np.testing.assert_array_equal(pts, [[0.0, 0.0], [1.0, 0.0]])

    def test_points_reader_rejects_mid_file_garbage(self):
        with pytest.raises(ValueError, match="line 3"):
            read_points_csv(io.StringIO("0,0\n1,0\nbad,row\n"))

    def test_aligned_series_validates_monotone_timestamps(self):
        with pytest.raises(ValueError):
            AlignedSeries(minutes(0, 0), ["a"], np.ones((2, 1)))


class TestSessionFilter:
    def test_keeps_only_bars_in_range(self):
        from datetime import time

        s = synth_generate(0, SynthSpec(length=1440))
        day = s.session(time(9, 30), time(16, 0))
        assert len(day) == 391  # 09:30 through 16:00 inclusive
        assert all(time(9, 30) <= ts.time() <= time(16, 0)
                   for ts in day.timestamps)

    def test_empty_session_rejected(self):
        from datetime import time

        s = synth_generate(0, SynthSpec(length=60))  # 00:00-00:59
        with pytest.raises(ValueError, match="no bars"):
            s.session(time(9, 30), time(16, 0))
