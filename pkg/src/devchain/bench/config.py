import asyncio
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from devchain.bench.adapters import (
    GatewayReadAdapter,
    LocalReadAdapter,
    LocalWriteAdapter,
    RpcReadAdapter,
    RpcWriteAdapter,
)
from devchain.bench.demo import BENCH_PROJECT, demo_network
from devchain.bench.resources import DEFAULT_INTERVAL, MonitorTarget, ResourceSampler
from devchain.bench.round import QueryState, RoundSpec, SubmitWrite, run_round
from devchain.config import load_yaml
from devchain.errors import AdapterUnavailable, InvalidConfig
from devchain.ledger.identity import load_key_file
from devchain.node.client import AsyncNodeClient, NodeClient, Signer

logger = logging.getLogger(__name__)


@dataclass
class BenchConfig:
    rounds: list[RoundSpec]
    prepopulate: int = 1000
    payload_bytes: int = 64
    endpoint: str | None = None
    gateway: str | None = None
    monitor: list[str] = field(default_factory=list)
    key_files: list[str] = field(default_factory=list)
    interval: float = DEFAULT_INTERVAL

    @property
    def writers(self) -> int:
        writes = [r.workers for r in self.rounds if isinstance(r.workload, SubmitWrite)]
        return max(writes, default=0)


def bench_config_from_doc(doc: dict) -> BenchConfig:
    if not isinstance(doc, dict) or not isinstance(doc.get("rounds"), list):
        raise InvalidConfig("Benchmark config needs a list of rounds")
    try:
        config = BenchConfig(
            rounds=[RoundSpec.from_doc(i, r) for i, r in enumerate(doc["rounds"])],
            prepopulate=int(doc.get("prepopulate", 1000)),
            payload_bytes=int(doc.get("payload_bytes", 64)),
            endpoint=doc.get("endpoint"),
            gateway=doc.get("gateway"),
            monitor=list(doc.get("monitor", [])),
            key_files=list(doc.get("key_files", [])),
            interval=float(doc.get("interval", DEFAULT_INTERVAL)),
        )
    except (TypeError, ValueError) as e:
        raise InvalidConfig(f"Invalid benchmark config: {e}")
    if config.prepopulate < 1:
        raise InvalidConfig("prepopulate must be >= 1")
    return config


def load_bench_config(path) -> BenchConfig:
    path = Path(path)
    if not path.exists():
        raise InvalidConfig(f"Benchmark config {path} not found")
    return bench_config_from_doc(load_yaml(path))


def _node_target(endpoint: str) -> MonitorTarget:
    client = NodeClient(endpoint)
    stats = client.call("node_stats")

    def traffic():
        now = client.call("node_stats")
        return now["bytes_in"], now["bytes_out"]

    return MonitorTarget(name=stats["name"], pid=stats["pid"], traffic=traffic)


class Benchmark:
    """Runs every round of a BenchConfig, sampling resources per round."""

    def __init__(self, config: BenchConfig):
        self.config = config
        self.demo = None

    def _with_keyspace(self, spec: RoundSpec) -> RoundSpec:
        workload = spec.workload
        if isinstance(workload, QueryState) and workload.keyspace > self.config.prepopulate:
            workload = QueryState(workload.key_pattern, self.config.prepopulate, workload.first)
        if isinstance(workload, SubmitWrite) and "to" not in workload.args and self.demo:
            workload = SubmitWrite(
                workload.contract,
                workload.operation,
                {**workload.args, "to": self.demo.sink},
                workload.project_id or BENCH_PROJECT,
            )
        return RoundSpec(
            spec.index, spec.label, workload, spec.termination, spec.rate, spec.workers
        )

    def _remote_signers(self):
        if not self.config.key_files:
            raise InvalidConfig("Write rounds against a node need key_files")
        return [Signer(*load_key_file(path), client=None) for path in self.config.key_files]

    def adapter_for(self, spec: RoundSpec):
        write = isinstance(spec.workload, SubmitWrite)
        if self.config.gateway and not write:
            return GatewayReadAdapter(self.config.gateway)
        if self.config.endpoint:
            client = AsyncNodeClient(self.config.endpoint)
            if write:
                return RpcWriteAdapter(client, self._remote_signers())
            return RpcReadAdapter(client)
        if write:
            return LocalWriteAdapter(self.demo.network, self.demo.writers)
        return LocalReadAdapter(self.demo.network.peer)

    def targets(self) -> list[MonitorTarget]:
        if self.config.monitor:
            return [_node_target(endpoint) for endpoint in self.config.monitor]
        return [MonitorTarget(name="devchain-bench", pid=os.getpid())]

    def run(self):
        if not self.config.endpoint and not self.config.gateway:
            self.demo = demo_network(
                self.config.prepopulate,
                self.config.payload_bytes,
                writers=max(1, self.config.writers),
            )

        rounds, resources = [], []
        for spec in self.config.rounds:
            spec = self._with_keyspace(spec)
            sampler = ResourceSampler(self.targets(), self.config.interval)
            with sampler:
                try:
                    metrics = asyncio.run(run_round(spec, self.adapter_for(spec)))
                except AdapterUnavailable as e:
                    logger.error(f" --> {spec.name} could not start: {e}")
                    raise
            rounds.append(metrics)
            resources.append(sampler.summaries)
        return rounds, resources


def run_benchmark(config: BenchConfig):
    return Benchmark(config).run()
