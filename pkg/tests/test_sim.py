import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schcdns.bench import samples_to_csv
from schcdns.errors import ConfigError, ResponseMissedWindow
from schcdns.latency import Constant, Uniform
from schcdns.sim import (
    ClassATimingModel,
    LatencyModel,
    duty_cycle_check,
    pipeline_budget,
    rtt_formula,
    run_batch,
    simulate_exchange,
)

DEFAULT = ClassATimingModel()
LAT = LatencyModel()


def slow(ms):
    return LatencyModel(base_processing=Constant(ms))


class TestModel:
    def test_defaults(self):
        assert (DEFAULT.airtime_ms, DEFAULT.rx1_delay_ms, DEFAULT.rx2_delay_ms) == (100, 1000, 2000)
        assert DEFAULT.rx2_len_ms == 200 and DEFAULT.delivery_window == "rx2"

    @pytest.mark.parametrize("kwargs", [
        {"rx1_delay_ms": 2000}, {"airtime_ms": 0}, {"rx2_len_ms": -1},
        {"delivery_window": "rx3"}, {"poll_delay_ms": -5},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            ClassATimingModel(**kwargs)


class TestExchange:
    def test_default_rtt(self):
        trace = simulate_exchange(DEFAULT, LAT, 1, seed=0)
        assert trace.sample.rtt == 4400 == rtt_formula(DEFAULT)

    def test_event_ledger(self):
        # hand-written event sequence for the defaults
        trace = simulate_exchange(DEFAULT, LAT, 1, seed=0)
        seq = [(e.time, e.kind, e.uplink, e.window) for e in trace.events
               if e.kind != "enqueue_downlink"]
        assert seq == [
            (0, "uplink_start", 0, None), (100, "uplink_end", 0, None),
            (1100, "rx_open", 0, "rx1"), (1300, "rx_close", 0, "rx1"),
            (2100, "rx_open", 0, "rx2"), (2300, "rx_close", 0, "rx2"),
            (2300, "uplink_start", 1, None), (2400, "uplink_end", 1, None),
            (3400, "rx_open", 1, "rx1"), (3600, "rx_close", 1, "rx1"),
            (4400, "rx_open", 1, "rx2"), (4400, "downlink_delivered", 1, "rx2"),
            (4600, "rx_close", 1, "rx2"),
        ]

    def test_rx1_delivery(self):
        rx1 = ClassATimingModel(delivery_window="rx1")
        assert (simulate_exchange(rx1, LAT, 1, 0).sample.rtt
                == simulate_exchange(DEFAULT, LAT, 1, 0).sample.rtt - 1000)

    def test_poll_delay_adds(self):
        model = ClassATimingModel(poll_delay_ms=250)
        assert simulate_exchange(model, LAT, 2, 0).sample.rtt == 4650

    def test_pipeline_too_slow(self):
        trace = simulate_exchange(DEFAULT, slow(10_000), 1, 0)
        assert isinstance(trace.missed, ResponseMissedWindow)
        assert trace.sample.t1 is None
        assert trace.first("downlink_delivered") is None

    def test_budget_edge(self):
        budget = pipeline_budget(DEFAULT)
        assert simulate_exchange(DEFAULT, slow(budget - 0.001), 1, 0).missed is None
        assert simulate_exchange(DEFAULT, slow(budget), 1, 0).missed is not None

    def test_enqueue_after_first_uplink(self):
        trace = simulate_exchange(DEFAULT, LAT, 3, 0)
        assert trace.first("enqueue_downlink").time > trace.first("uplink_end", 0).time

    @pytest.mark.parametrize("scenario", [1, 2, 3, 4])
    def test_sample_order(self, scenario):
        simulate_exchange(DEFAULT, LAT, scenario, 0).sample.check_order()


class TestBatch:
    def test_constant_identical(self):
        samples = run_batch(20, DEFAULT, LAT, 4, seed=1)
        assert len({(s.srt, s.rtt, s.outcome) for s in samples}) == 1

    def test_deterministic(self):
        lat = LatencyModel(dns=Uniform(5, 15), http=Uniform(300, 900))
        a = run_batch(50, DEFAULT, lat, 3, seed=7)
        b = run_batch(50, DEFAULT, lat, 3, seed=7)
        assert samples_to_csv(a) == samples_to_csv(b)
        assert samples_to_csv(a) != samples_to_csv(run_batch(50, DEFAULT, lat, 3, seed=8))

    def test_scenario3_minus_2(self):
        s2 = run_batch(30, DEFAULT, LAT, 2, 0)
        s3 = run_batch(30, DEFAULT, LAT, 3, 0)
        diff = sum(s.srt for s in s3) / 30 - sum(s.srt for s in s2) / 30
        assert abs(diff - (10 + 600)) <= 1

    def test_scenario3_always_fetches(self):
        outcomes = [s.outcome for s in run_batch(10, DEFAULT, LAT, 3, 0)]
        assert outcomes == ["initial_fetch"] + ["refetched"] * 9

    def test_scenario4_never_fetches(self):
        samples = run_batch(1200, DEFAULT, LAT, 4, 0)
        assert all(s.t0ppp is None and s.t1ppp is None for s in samples)

    def test_n_must_be_positive(self):
        with pytest.raises(ConfigError):
            run_batch(0, DEFAULT, LAT, 1, 0)

    def test_rtt_independent_of_pipeline(self):
        lats = (slow(1), slow(500), slow(2000))
        rtts = {s.rtt for lat in lats for s in run_batch(3, DEFAULT, lat, 1, 0)}
        assert rtts == {4400}

    def test_duty_cycle_spacing(self):
        model = ClassATimingModel(enforce_duty_cycle=True)
        traces = run_batch(5, model, LAT, 1, 0, traces=True)
        assert all(t.sample.t1 is not None for t in traces)
        # the poll waits out the off time of the data uplink
        assert traces[0].first("uplink_start", 1).time >= 100 + model.off_time_ms()


class TestDutyCycle:
    def test_single(self):
        assert duty_cycle_check(DEFAULT, [0]).ok

    def test_37_per_hour(self):
        assert duty_cycle_check(DEFAULT, [i * 1000 for i in range(37)]).ok

    def test_threshold(self):
        at_limit = duty_cycle_check(DEFAULT, [i * 9000 for i in range(360)])
        assert at_limit.ok and at_limit.worst_airtime_ms == 36_000
        assert not duty_cycle_check(DEFAULT, [i * 9000 for i in range(361)]).ok

    def test_sliding_window(self):
        # 361 uplinks spread over more than an hour never exceed the limit
        assert duty_cycle_check(DEFAULT, [i * 10_000 for i in range(361)]).ok

    def test_zero_airtime_entries(self):
        assert duty_cycle_check(DEFAULT, [(0, 0.0), (10, 0.0)]).ok

    def test_empty_schedule(self):
        with pytest.raises(ConfigError):
            duty_cycle_check(DEFAULT, [])


models = st.builds(
    lambda air, rx1, gap, rx2_len, poll, window: ClassATimingModel(
        airtime_ms=air, rx1_delay_ms=rx1, rx2_delay_ms=rx1 + gap, rx2_len_ms=rx2_len,
        poll_delay_ms=poll, delivery_window=window),
    st.floats(1, 3000), st.floats(1, 5000), st.floats(1, 5000),
    st.one_of(st.none(), st.floats(1, 3000)), st.floats(0, 5000), st.sampled_from(["rx1", "rx2"]),
)


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(models, st.floats(0, 15_000), st.integers(1, 4))
    def test_never_outside_window(self, model, processing, scenario):
        trace = simulate_exchange(model, slow(processing), scenario, 0)
        assert trace.delivered_in_window() in (None, True)
        rx2 = trace.windows(0)["rx2"]
        end = trace.first("uplink_end", 0).time
        assert rx2[0] - end == pytest.approx(model.rx2_delay_ms)
        assert rx2[1] - rx2[0] == pytest.approx(model.rx2_len_ms)

    @settings(max_examples=100, deadline=None)
    @given(models)
    def test_rtt_matches_formula(self, model):
        trace = simulate_exchange(model, LatencyModel(base_processing=Constant(0.5)), 1, 0)
        if trace.missed is None:
            assert trace.sample.rtt == pytest.approx(rtt_formula(model))

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1, 1000), st.floats(0.5, 500))
    def test_airtime_monotone(self, air, extra):
        a = simulate_exchange(ClassATimingModel(airtime_ms=air), slow(1), 1, 0).sample.rtt
        b = simulate_exchange(ClassATimingModel(airtime_ms=air + extra), slow(1), 1, 0).sample.rtt
        assert b > a
