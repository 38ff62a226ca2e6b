from dataclasses import dataclass, field

from devchain.config import (
    NetworkConfig,
    default_max_batch_size,
    default_max_batch_wait_ms,
    default_queue_capacity,
)
from devchain.errors import InvalidConfig
from devchain.ledger.identity import Identity


@dataclass(frozen=True)
class OrderingPolicy:
    orderer_identity: Identity | None = None
    max_batch_size: int = default_max_batch_size
    max_batch_wait_ms: int = default_max_batch_wait_ms
    queue_capacity: int = default_queue_capacity

    def __post_init__(self):
        if self.max_batch_size < 1:
            raise InvalidConfig("max_batch_size must be >= 1")
        if self.max_batch_wait_ms < 1:
            raise InvalidConfig("max_batch_wait must be >= 1 ms")
        if self.queue_capacity < 1:
            raise InvalidConfig("queue_capacity must be >= 1")

    @classmethod
    def from_config(cls, config: NetworkConfig, orderer_identity=None) -> "OrderingPolicy":
        return cls(
            orderer_identity=orderer_identity,
            max_batch_size=config.policy.max_batch_size,
            max_batch_wait_ms=config.policy.max_batch_wait_ms,
            queue_capacity=config.policy.queue_capacity,
        )


@dataclass(frozen=True)
class NetworkTopology:
    """Organizations with one peer each and a single orderer."""

    orgs: tuple[str, ...] = ("Org1", "Org2", "Org3", "Org4")
    orderer: str = "orderer"
    peers: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.orgs:
            raise InvalidConfig("A network needs at least one organization")
        if len(set(self.orgs)) != len(self.orgs):
            raise InvalidConfig(f"Organization names must be unique: {self.orgs}")
        if not self.peers:
            object.__setattr__(self, "peers", {org: f"peer0.{org.lower()}" for org in self.orgs})

    @classmethod
    def from_config(cls, config: NetworkConfig) -> "NetworkTopology":
        return cls(
            orgs=tuple(org.name for org in config.orgs),
            peers={org.name: org.endpoint for org in config.orgs},
            orderer=config.orderer.endpoint,
        )
