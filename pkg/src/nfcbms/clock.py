"""Virtual simulation clock.

Time is held as integer microseconds so that step durations configured as
decimal milliseconds accumulate without floating-point drift; public
accessors convert back to milliseconds.
"""

from __future__ import annotations


def ms_to_us(ms: float) -> int:
    """Convert a millisecond duration to integer microseconds."""
    if ms < 0:
        raise ValueError(f"negative duration: {ms}")
    return round(ms * 1000)


class SimClock:
    """Monotone virtual clock, advanced only by explicit step durations."""

    def __init__(self, start_us: int = 0):
        if start_us < 0:
            raise ValueError("clock cannot start before zero")
        self._now_us = start_us

    @property
    def now_us(self) -> int:
        return self._now_us

    @property
    def now_ms(self) -> float:
        return self._now_us / 1000

    def advance_us(self, delta_us: int) -> None:
        if delta_us < 0:
            raise ValueError("clock can only move forward")
        self._now_us += delta_us

    def advance_ms(self, delta_ms: float) -> None:
        self.advance_us(ms_to_us(delta_ms))

    def __repr__(self) -> str:
        return f"SimClock(now_ms={self.now_ms})"
