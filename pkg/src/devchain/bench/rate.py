"""Rate controllers and termination policies for benchmark rounds.

A schedule is the array of send instants, in seconds from round start,
computed up front and never changed while the round runs.
"""

import math
from dataclasses import dataclass

import numpy as np

from devchain.errors import InvalidConfig


@dataclass(frozen=True)
class TxNumber:
    count: int

    kind = "TxNumber"

    def __post_init__(self):
        if not isinstance(self.count, int) or self.count <= 0:
            raise InvalidConfig(f"TxNumber count must be a positive integer, got {self.count!r}")

    def to_doc(self) -> dict:
        return {"count": self.count, "kind": self.kind}


@dataclass(frozen=True)
class TxDuration:
    seconds: float

    kind = "TxDuration"

    def __post_init__(self):
        if self.seconds <= 0:
            raise InvalidConfig(f"TxDuration must be positive, got {self.seconds!r}")

    def to_doc(self) -> dict:
        return {"kind": self.kind, "seconds": self.seconds}


@dataclass(frozen=True)
class FixedRate:
    tps: float

    kind = "FixedRate"

    def __post_init__(self):
        if self.tps <= 0:
            raise InvalidConfig(f"FixedRate tps must be positive, got {self.tps!r}")

    def horizon(self, count: int) -> float:
        return count / self.tps

    def expected_sends(self, horizon: float) -> float:
        return self.tps * horizon

    def instants(self, k: np.ndarray, horizon: float) -> np.ndarray:
        return k / self.tps

    def to_doc(self) -> dict:
        return {"kind": self.kind, "tps": self.tps}


@dataclass(frozen=True)
class LinearRate:
    """Send rate ramping linearly from `start_tps` to `end_tps` over the round.

    Cumulative sends are N(t) = a*t + (b - a) * t**2 / (2*H); the k-th send
    happens where N(t) = k.
    """

    start_tps: float
    end_tps: float

    kind = "LinearRate"

    def __post_init__(self):
        if self.start_tps <= 0 or self.end_tps <= 0:
            raise InvalidConfig(
                f"LinearRate rates must be positive, got {self.start_tps!r}..{self.end_tps!r}"
            )

    def horizon(self, count: int) -> float:
        return 2 * count / (self.start_tps + self.end_tps)

    def expected_sends(self, horizon: float) -> float:
        return horizon * (self.start_tps + self.end_tps) / 2

    def cumulative(self, t, horizon: float):
        a, b = self.start_tps, self.end_tps
        return a * t + (b - a) * np.square(t) / (2 * horizon)

    def instants(self, k: np.ndarray, horizon: float) -> np.ndarray:
        a, b = self.start_tps, self.end_tps
        if a == b:
            return k / a
        slope = (b - a) / horizon
        # positive root of slope/2 * t^2 + a*t - k = 0
        return (np.sqrt(a * a + 2 * slope * k) - a) / slope

    def to_doc(self) -> dict:
        return {"end_tps": self.end_tps, "kind": self.kind, "start_tps": self.start_tps}


RATE_KINDS = {"FixedRate": FixedRate, "LinearRate": LinearRate, "Linearate": LinearRate}


def rate_from_doc(doc: dict):
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind not in RATE_KINDS:
        raise InvalidConfig(f"Unknown rate controller {doc!r}")
    if RATE_KINDS[kind] is FixedRate:
        return FixedRate(float(doc["tps"]))
    return LinearRate(float(doc["start_tps"]), float(doc["end_tps"]))


def termination_from_doc(doc: dict):
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == TxNumber.kind:
        return TxNumber(int(doc["count"]))
    if kind == TxDuration.kind:
        return TxDuration(float(doc["seconds"]))
    raise InvalidConfig(f"Unknown termination policy {doc!r}")


def next_send_offsets(rate, termination) -> np.ndarray:
    """Send instants in seconds for a whole round.

    TxNumber rounds send exactly `count` times; TxDuration rounds send every
    instant strictly before the deadline.
    """
    if isinstance(termination, TxNumber):
        horizon = rate.horizon(termination.count)
        return rate.instants(np.arange(termination.count, dtype=np.float64), horizon)

    horizon = termination.seconds
    candidates = math.ceil(rate.expected_sends(horizon)) + 1
    offsets = rate.instants(np.arange(candidates, dtype=np.float64), horizon)
    return offsets[offsets < horizon]
