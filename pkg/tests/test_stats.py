from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from schcdns.errors import BadP, EmptyInput
from schcdns.stats import cdf, emit_plot_data, mean, median, percentile, read_plot_data, summarize

values_st = st.lists(st.integers(0, 50).map(float) | st.floats(0, 1e4), min_size=1, max_size=60)


class TestCdf:
    def test_example(self):
        assert cdf([5, 5, 10]) == [(5, 2 / 3), (10, 1.0)]

    def test_constant(self):
        assert cdf([7.0] * 9) == [(7.0, 1.0)]

    def test_empty(self):
        with pytest.raises(EmptyInput):
            cdf([])

    @given(values_st)
    def test_brute_force(self, values):
        series = cdf(values)
        assert [v for v, _ in series] == sorted(set(values))
        for v, frac in series:
            assert frac == sum(1 for x in values if x <= v) / len(values)
        fracs = [f for _, f in series]
        assert all(a < b for a, b in zip(fracs, fracs[1:])) and fracs[-1] == 1.0


class TestPercentile:
    def test_nearest_rank(self):
        assert percentile(range(1, 101), 99) == 99
        assert percentile(range(1, 101), 100) == 100
        assert percentile(range(1, 101), 0.5) == 1

    @pytest.mark.parametrize("p", [0.1, 50, 99.9, 100])
    def test_single(self, p):
        assert percentile([42.0], p) == 42.0

    @pytest.mark.parametrize("p", [0, -1, 100.01])
    def test_bad_p(self, p):
        with pytest.raises(BadP):
            percentile([1, 2], p)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            percentile([], 50)

    @given(values_st, st.integers(1, 1000).map(lambda k: k / 10))
    def test_sort_index_oracle(self, values, p):
        n = len(values)
        rank = -(-Fraction(str(p)) * n // 100)
        assert percentile(values, p) == sorted(values)[int(rank) - 1]

    def test_median_and_mean(self):
        assert median([3, 1, 2, 4]) == 2
        assert mean([1, 2, 3, 4]) == 2.5
        s = summarize([1.0, 2.0, 3.0])
        assert (s["n"], s["min"], s["max"], s["p99"]) == (3, 1.0, 3.0, 3.0)


class TestPlotData:
    def test_round_trip(self, tmp_path):
        series = cdf([0.1, 0.2, 0.2, 1 / 3, 4400.0])
        path = emit_plot_data(series, tmp_path / "cdf.csv")
        assert read_plot_data(path) == series
        lines = path.read_text().splitlines()
        assert lines[0] == "value_ms,cdf" and lines[-1].endswith(",1.0")

    def test_shift_by_http_leg(self, tmp_path):
        from schcdns.sim import ClassATimingModel, LatencyModel, run_batch

        model, lat = ClassATimingModel(), LatencyModel()
        out = {}
        for scenario in (3, 4):
            srt = [s.srt for s in run_batch(10, model, lat, scenario, 0)]
            out[scenario] = read_plot_data(emit_plot_data(cdf(srt), tmp_path / f"{scenario}.csv"))
        assert [v for v, _ in out[3]] == [v + 600 for v, _ in out[4]]
        assert [c for _, c in out[3]] == [c for _, c in out[4]]

    def test_bad_file(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n")
        with pytest.raises(ValueError):
            read_plot_data(path)
