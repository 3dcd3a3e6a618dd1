"""Millisecond clocks: wall time for live runs, virtual time for simulation."""

import time


class WallClock:
    def now(self):
        return time.perf_counter() * 1000.0

    def advance(self, ms):
        time.sleep(ms / 1000.0)


class VirtualClock:
    """Time moves only when told to. No sleeping."""

    def __init__(self, start=0.0):
        self._now = float(start)

    def now(self):
        return self._now

    def advance(self, ms):
        if ms < 0:
            raise ValueError(f"cannot advance by {ms} ms")
        self._now += ms

    def set(self, t):
        if t < self._now:
            raise ValueError(f"virtual clock cannot go back from {self._now} to {t}")
        self._now = float(t)
