"""An orderer and one peer per organization wired together in a single process."""

import logging
import time
from dataclasses import dataclass, field

from devchain.consensus.orderer import Orderer
from devchain.consensus.peer import Peer
from devchain.consensus.policy import NetworkTopology, OrderingPolicy
from devchain.ledger.encoding import to_hex
from devchain.ledger.identity import Identity, Role, generate_identity

logger = logging.getLogger(__name__)


@dataclass
class ManualClock:
    """Millisecond clock that only moves when told to."""

    now: int = 1_700_000_000_000

    def __call__(self) -> int:
        return self.now

    def advance(self, ms: int) -> int:
        self.now += ms
        return self.now


@dataclass
class Member:
    identity: Identity
    secret_key: bytes

    @property
    def member_id(self) -> str:
        return to_hex(self.identity.member_id)


@dataclass
class LocalNetwork:
    topology: NetworkTopology = field(default_factory=NetworkTopology)
    policy: OrderingPolicy = field(default_factory=OrderingPolicy)
    time_scale_divisor: int = 1
    clock: object = field(default_factory=ManualClock)
    members: dict[str, Member] = field(default_factory=dict)
    allocations: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        orderer_identity, self.orderer_secret = generate_identity(Role.owner, "orderer")
        self.orderer_identity = orderer_identity
        self.peers = {org: Peer(org) for org in self.topology.orgs}
        self.orderer = Orderer(
            self.orderer_secret, self.policy, Peer("orderer"), clock=self.clock
        )
        for peer in self.peers.values():
            self.orderer.add_listener(peer.validate_and_commit)

        genesis_document = {
            "allocations": dict(sorted(self.allocations.items())),
            "identities": sorted(
                (m.identity.to_doc() for m in self.members.values()),
                key=lambda doc: doc["member_id"],
            ),
            "orderer": to_hex(orderer_identity.public_key),
            "orgs": list(self.topology.orgs),
            "time_scale_divisor": self.time_scale_divisor,
        }
        self.genesis = self.orderer.bootstrap(genesis_document)

    @classmethod
    def with_members(cls, roles: dict[str, tuple[Role, str]], balance: int = 0, **kwargs):
        """Network whose genesis registers one generated identity per name.

        `roles` maps a member name to (role, org); every member starts with
        `balance` cents.
        """
        members = {}
        for name, (role, org) in roles.items():
            identity, secret_key = generate_identity(role, org)
            members[name] = Member(identity, secret_key)
        allocations = {m.member_id: balance for m in members.values()} if balance else {}
        return cls(members=members, allocations=allocations, **kwargs)

    @property
    def peer(self) -> Peer:
        return self.peers[self.topology.orgs[0]]

    def submit(self, tx):
        return self.orderer.submit(tx)

    def cut(self):
        return self.orderer.cut(self.clock())

    def flush(self, max_blocks: int = 10_000):
        """Cut blocks until the queue is empty; returns the new blocks."""
        blocks = []
        while self.orderer.pending and len(blocks) < max_blocks:
            block = self.cut()
            if block is None:
                self.advance(self.orderer.next_wakeup(self.clock()))
                continue
            blocks.append(block)
        return blocks

    def advance(self, ms: int):
        if isinstance(self.clock, ManualClock):
            self.clock.advance(ms)
        else:
            time.sleep(ms / 1000)

    def tick(self, ms: int):
        """Let time pass and give the orderer a chance to cut (heartbeat included)."""
        self.advance(ms)
        return self.cut()

    def state_digests(self) -> dict[str, bytes]:
        return {org: peer.state_digest() for org, peer in self.peers.items()}

    def consistent(self) -> bool:
        return len(set(self.state_digests().values())) == 1

