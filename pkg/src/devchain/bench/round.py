import asyncio
import logging
import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from devchain.bench.rate import (
    FixedRate,
    LinearRate,
    TxDuration,
    TxNumber,
    next_send_offsets,
    rate_from_doc,
    termination_from_doc,
)
from devchain.errors import AdapterUnavailable, DevchainException, InvalidConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QueryState:
    """Keyed state reads; `{k}` in the pattern cycles through `keyspace` keys."""

    key_pattern: str = "project/bench/metric/{k:012d}"
    keyspace: int = 1000
    first: int = 1

    kind = "QueryState"

    def key(self, k: int) -> str:
        return self.key_pattern.format(k=self.first + k % self.keyspace)


@dataclass(frozen=True)
class SubmitWrite:
    """Signed writes; the adapter fills in submitter and nonce."""

    contract: str = "token"
    operation: str = "transfer"
    args: dict = field(default_factory=lambda: {"cents": 1})
    project_id: str = ""

    kind = "SubmitWrite"


def workload_from_doc(doc: dict):
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == QueryState.kind:
        return QueryState(
            key_pattern=doc.get("key_pattern", QueryState.key_pattern),
            keyspace=int(doc.get("keyspace", 1000)),
            first=int(doc.get("first", 1)),
        )
    if kind == SubmitWrite.kind:
        return SubmitWrite(
            contract=doc.get("contract", "token"),
            operation=doc.get("operation", "transfer"),
            args=dict(doc.get("args", {"cents": 1})),
            project_id=doc.get("project_id", ""),
        )
    raise InvalidConfig(f"Unknown workload {doc!r}")


@dataclass(frozen=True)
class RoundSpec:
    index: int
    label: str
    workload: QueryState | SubmitWrite
    termination: TxNumber | TxDuration
    rate: FixedRate | LinearRate
    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise InvalidConfig(f"A round needs at least one worker, got {self.workers}")

    @property
    def name(self) -> str:
        return f"Round{self.index}-{self.label}-{self.termination.kind}-{self.rate.kind}"

    @classmethod
    def from_doc(cls, index: int, doc: dict) -> "RoundSpec":
        try:
            return cls(
                index=index,
                label=doc["label"],
                workload=workload_from_doc(doc.get("workload", {"kind": "QueryState"})),
                termination=termination_from_doc(doc["termination"]),
                rate=rate_from_doc(doc["rate"]),
                workers=int(doc.get("workers", 1)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidConfig(f"Invalid round {index}: {e}")


@dataclass(frozen=True)
class RoundMetrics:
    name: str
    succ: int
    fail: int
    send_rate_tps: float
    max_latency_s: float
    min_latency_s: float
    avg_latency_s: float
    throughput_tps: float
    partial: bool = False

    @property
    def attempted(self) -> int:
        return self.succ + self.fail

    def to_doc(self) -> dict:
        return {
            "avg_latency_s": self.avg_latency_s,
            "fail": self.fail,
            "max_latency_s": self.max_latency_s,
            "min_latency_s": self.min_latency_s,
            "name": self.name,
            "partial": self.partial,
            "send_rate_tps": self.send_rate_tps,
            "succ": self.succ,
            "throughput_tps": self.throughput_tps,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "RoundMetrics":
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__ if k in doc})


class SutAdapter(Protocol):
    """The system under test as the harness sees it.

    `invoke` returns once the tx is confirmed (read answered, write committed)
    and raises a DevchainException when it failed. AdapterUnavailable means
    the system cannot be reached at all and ends the round.
    """

    async def open(self) -> None: ...

    async def invoke(self, workload, k: int) -> None: ...

    async def close(self) -> None: ...


def aggregate(name: str, sent, confirmed, ok, partial: bool = False) -> RoundMetrics:
    """Metrics from per-tx send and confirm instants (seconds) and success flags."""
    sent = np.asarray(sent, dtype=np.float64)
    confirmed = np.asarray(confirmed, dtype=np.float64)
    ok = np.asarray(ok, dtype=bool)
    attempted = len(sent)
    succ = int(ok.sum())
    if attempted == 0:
        return RoundMetrics(name, 0, 0, 0.0, 0.0, 0.0, 0.0, 0.0, partial)

    first_send = sent.min()
    send_span = sent.max() - first_send
    send_rate = attempted / send_span if send_span > 0 else 0.0

    if succ:
        latencies = confirmed[ok] - sent[ok]
        confirm_span = confirmed[ok].max() - first_send
        throughput = succ / confirm_span if confirm_span > 0 else 0.0
        max_l, min_l, avg_l = latencies.max(), latencies.min(), latencies.mean()
    else:
        throughput = max_l = min_l = avg_l = 0.0

    return RoundMetrics(
        name=name,
        succ=succ,
        fail=attempted - succ,
        send_rate_tps=float(send_rate),
        max_latency_s=float(max_l),
        min_latency_s=float(min_l),
        avg_latency_s=float(avg_l),
        throughput_tps=float(throughput),
        partial=partial,
    )


async def run_round(spec: RoundSpec, adapter: SutAdapter, clock=time.perf_counter) -> RoundMetrics:
    """Drive one round against `adapter` and aggregate its metrics.

    Worker w sends the txs k = w, w + workers, ... each at its scheduled
    instant, without waiting for earlier txs to confirm. Confirmations are
    collected by one task per tx.
    """
    offsets = next_send_offsets(spec.rate, spec.termination)
    sent = np.full(len(offsets), np.nan)
    confirmed = np.full(len(offsets), np.nan)
    ok = np.zeros(len(offsets), dtype=bool)
    aborted = asyncio.Event()

    logger.info(f" --> {spec.name}: {len(offsets)} txs over {spec.workers} workers")
    await adapter.open()
    start = clock()

    async def confirm(k: int):
        try:
            await adapter.invoke(spec.workload, k)
            ok[k] = True
        except AdapterUnavailable as e:
            if not aborted.is_set():
                logger.error(f" --> {spec.name} aborted: {e}")
            aborted.set()
        except DevchainException as e:
            logger.debug(f" --> tx {k} failed: {e}")
        confirmed[k] = clock()

    async def worker(w: int):
        in_flight = []
        for k in range(w, len(offsets), spec.workers):
            delay = start + offsets[k] - clock()
            if delay > 0:
                await asyncio.sleep(delay)
            if aborted.is_set():
                break
            sent[k] = clock()
            in_flight.append(asyncio.create_task(confirm(k)))
            # let the new tx reach the adapter before the next send
            await asyncio.sleep(0)
        await asyncio.gather(*in_flight)

    try:
        await asyncio.gather(*(worker(w) for w in range(spec.workers)))
    finally:
        await adapter.close()

    attempted = ~np.isnan(sent)
    metrics = aggregate(
        spec.name,
        sent[attempted],
        confirmed[attempted],
        ok[attempted],
        partial=aborted.is_set(),
    )
    logger.info(
        f" --> {spec.name}: succ={metrics.succ} fail={metrics.fail} "
        f"send={metrics.send_rate_tps:.1f} tps throughput={metrics.throughput_tps:.1f} tps"
    )
    return metrics
