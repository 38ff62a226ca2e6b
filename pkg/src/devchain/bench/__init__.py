"""Benchmark harness: rate-controlled rounds, resource sampling and reports."""

from devchain.bench.config import BenchConfig, Benchmark, load_bench_config, run_benchmark
from devchain.bench.rate import FixedRate, LinearRate, TxDuration, TxNumber, next_send_offsets
from devchain.bench.report import render_report
from devchain.bench.resources import MonitorTarget, ResourceSampler, ResourceSummary
from devchain.bench.round import QueryState, RoundMetrics, RoundSpec, SubmitWrite, run_round

__all__ = [
    "BenchConfig",
    "Benchmark",
    "FixedRate",
    "LinearRate",
    "MonitorTarget",
    "QueryState",
    "ResourceSampler",
    "ResourceSummary",
    "RoundMetrics",
    "RoundSpec",
    "SubmitWrite",
    "TxDuration",
    "TxNumber",
    "load_bench_config",
    "next_send_offsets",
    "render_report",
    "run_benchmark",
    "run_round",
]
