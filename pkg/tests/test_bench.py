import asyncio
import os

import numpy as np
import pytest

from devchain.bench.adapters import LocalReadAdapter, LocalWriteAdapter
from devchain.bench.config import bench_config_from_doc
from devchain.bench.demo import demo_network
from devchain.bench.rate import (
    FixedRate,
    LinearRate,
    TxDuration,
    TxNumber,
    next_send_offsets,
    rate_from_doc,
)
from devchain.bench.report import parse_json_report, render_report, resource_row
from devchain.bench.resources import MB, MonitorTarget, ResourceSampler, ResourceSummary
from devchain.bench.round import (
    QueryState,
    RoundMetrics,
    RoundSpec,
    SubmitWrite,
    aggregate,
    run_round,
)
from devchain.errors import AdapterUnavailable, InvalidConfig, NotFound

ROUND0 = RoundMetrics(
    name="Round0-QueryPrivateData-TxNumber-FixedRate",
    succ=2500,
    fail=0,
    send_rate_tps=143.7,
    max_latency_s=0.30,
    min_latency_s=0.01,
    avg_latency_s=0.02,
    throughput_tps=143.6,
)


def test_fixed_rate_schedule():
    offsets = next_send_offsets(FixedRate(143.7), TxNumber(2500))
    assert len(offsets) == 2500
    assert offsets[0] == 0
    assert np.allclose(np.diff(offsets), 1 / 143.7)


def test_linear_rate_ramps_up():
    offsets = next_send_offsets(LinearRate(10, 30), TxNumber(100))
    gaps = np.diff(offsets)
    assert len(offsets) == 100
    assert offsets[-1] < 5.0
    assert np.all(gaps[1:] < gaps[:-1])
    assert gaps[0] == pytest.approx(1 / 10, rel=0.05)

    flat = next_send_offsets(LinearRate(20, 20), TxNumber(5))
    assert np.allclose(flat, np.arange(5) / 20)


def test_duration_rounds_stop_before_the_deadline():
    offsets = next_send_offsets(FixedRate(10), TxDuration(2))
    assert len(offsets) == 20
    assert offsets.max() < 2


def test_invalid_rates_and_terminations():
    for make in (lambda: FixedRate(0), lambda: LinearRate(0, 5), lambda: TxNumber(0)):
        with pytest.raises(InvalidConfig):
            make()
    with pytest.raises(InvalidConfig):
        TxDuration(-1)
    with pytest.raises(InvalidConfig):
        rate_from_doc({"kind": "Burst"})
    misspelled = {"end_tps": 2, "kind": "Linearate", "start_tps": 1}
    assert isinstance(rate_from_doc(misspelled), LinearRate)


def test_bench_config_documents():
    config = bench_config_from_doc(
        {
            "prepopulate": 50,
            "rounds": [
                {
                    "label": "QueryPrivateData",
                    "rate": {"kind": "FixedRate", "tps": 143.7},
                    "termination": {"count": 2500, "kind": "TxNumber"},
                },
                {
                    "label": "Transfer",
                    "rate": {"end_tps": 50, "kind": "LinearRate", "start_tps": 10},
                    "termination": {"kind": "TxDuration", "seconds": 30},
                    "workers": 4,
                    "workload": {"kind": "SubmitWrite"},
                },
            ],
        }
    )
    assert [r.name for r in config.rounds] == [
        "Round0-QueryPrivateData-TxNumber-FixedRate",
        "Round1-Transfer-TxDuration-LinearRate",
    ]
    assert config.writers == 4
    assert isinstance(config.rounds[0].workload, QueryState)

    for doc in ({}, {"rounds": [{"label": "x"}]}, {"prepopulate": 0, "rounds": []}):
        with pytest.raises(InvalidConfig):
            bench_config_from_doc(doc)


def test_aggregate():
    metrics = aggregate(
        "r", sent=[0.0, 1.0, 2.0, 3.0], confirmed=[0.5, 1.2, 2.1, 3.9], ok=[1, 1, 1, 0]
    )
    assert (metrics.succ, metrics.fail) == (3, 1)
    assert metrics.send_rate_tps == pytest.approx(4 / 3)
    assert metrics.max_latency_s == pytest.approx(0.5)
    assert metrics.min_latency_s == pytest.approx(0.1)
    assert metrics.avg_latency_s == pytest.approx(0.8 / 3)
    assert metrics.throughput_tps == pytest.approx(3 / 2.1)

    empty = aggregate("none", [], [], [])
    assert empty.attempted == 0


class CountingAdapter:
    def __init__(self, fail_at=(), unavailable_at=None):
        self.fail_at = set(fail_at)
        self.unavailable_at = unavailable_at
        self.calls = []
        self.closed = False

    async def open(self):
        pass

    async def invoke(self, workload, k):
        self.calls.append(k)
        if k == self.unavailable_at:
            raise AdapterUnavailable("gone")
        if k in self.fail_at:
            raise NotFound("missing")

    async def close(self):
        self.closed = True


def spec(count=20, tps=1000.0, workers=1, workload=None):
    return RoundSpec(0, "Test", workload or QueryState(), TxNumber(count), FixedRate(tps), workers)


def test_run_round_counts_successes_and_failures():
    adapter = CountingAdapter(fail_at={2, 7})
    metrics = asyncio.run(run_round(spec(workers=3), adapter))
    assert sorted(adapter.calls) == list(range(20))
    assert (metrics.succ, metrics.fail) == (18, 2)
    assert not metrics.partial
    assert adapter.closed


class SlowAdapter(CountingAdapter):
    def __init__(self, latency):
        super().__init__()
        self.latency = latency
        self.in_flight = 0
        self.peak = 0

    async def invoke(self, workload, k):
        self.in_flight += 1
        self.peak = max(self.peak, self.in_flight)
        await asyncio.sleep(self.latency)
        self.in_flight -= 1
        self.calls.append(k)


def test_sends_keep_the_schedule_while_confirmations_lag():
    adapter = SlowAdapter(latency=0.05)
    metrics = asyncio.run(run_round(spec(20, tps=400.0), adapter))
    assert metrics.succ == 20
    assert adapter.peak > 1
    assert metrics.send_rate_tps > 100
    assert metrics.min_latency_s >= 0.04


def test_unreachable_system_ends_the_round_early():
    adapter = CountingAdapter(unavailable_at=3)
    metrics = asyncio.run(run_round(spec(), adapter))
    assert adapter.calls == [0, 1, 2, 3]
    assert (metrics.succ, metrics.fail) == (3, 1)
    assert metrics.partial


def test_report_layout():
    report = render_report([ROUND0]).decode()
    lines = report.splitlines()
    assert lines[0] == "# Summary of performance metrics"
    assert lines[2] == (
        "| Name | Succ | Fail | Send Rate (TPS) | Max Latency (s) | Min Latency (s) "
        "| Avg Latency (s) | Throughput (TPS) |"
    )
    assert lines[4] == (
        "| Round0-QueryPrivateData-TxNumber-FixedRate | 2500 | 0 | 143.7 | 0.30 | 0.01 "
        "| 0.02 | 143.6 |"
    )


def test_resource_rows():
    summary = ResourceSummary(
        name="peer0.org1",
        cpu_max=12.5,
        cpu_avg=5.0,
        memory_max_mb=180.26,
        memory_avg_mb=175.0,
        traffic_in_mb=0.05,
        traffic_out_mb=6.03,
        disc_write_b=0,
        disc_read_b=4096,
    )
    assert resource_row(summary) == (
        "peer0.org1",
        "12.50",
        "5.00",
        "180.3",
        "175.0",
        "0.0500",
        "6.03",
        "0.00",
        "4096.00",
    )
    report = render_report([ROUND0], [[summary]]).decode()
    assert "## Resource Utilization for Round 0" in report

    rounds, resources = parse_json_report(render_report([ROUND0], [[summary]], fmt="json"))
    assert rounds == [ROUND0]
    assert resources == [[summary]]


def test_sampler_watches_this_process():
    traffic = iter([(0, 0), (MB, 2 * MB)])
    target = MonitorTarget("bench", os.getpid(), traffic=lambda: next(traffic))
    with ResourceSampler([target], interval=0.01) as sampler:
        sum(i * i for i in range(200_000))
    (summary,) = sampler.summaries
    assert summary.memory_max_mb > 0
    assert (summary.traffic_in_mb, summary.traffic_out_mb) == (1.0, 2.0)
    assert not summary.partial
    sampler.raise_for_vanished()

    with pytest.raises(InvalidConfig):
        ResourceSampler([target, target])


def test_demo_network_rounds():
    demo = demo_network(prepopulate=20, writers=2)
    assert demo.network.peer.query(demo.read_key(20))["scaled_value"] == 20

    reads = asyncio.run(
        run_round(spec(40, workload=QueryState(keyspace=20)), LocalReadAdapter(demo.network.peer))
    )
    assert (reads.succ, reads.fail) == (40, 0)

    write = SubmitWrite(args={"cents": 1, "to": demo.sink})
    adapter = LocalWriteAdapter(demo.network, demo.writers)
    writes = asyncio.run(run_round(spec(10, tps=200.0, workers=2, workload=write), adapter))
    assert (writes.succ, writes.fail) == (10, 0)
    assert demo.network.consistent()
