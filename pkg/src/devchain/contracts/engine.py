"""Deterministic contract engine.

Contract code is a pure function of (state, tx, block timestamp): no clocks,
randomness or I/O. Every write goes through the `TxContext.state` overlay, so
the caller decides whether the writes of an operation are kept.
"""

import logging
from dataclasses import dataclass, field

from devchain.consensus.events import Audience, EventDraft
from devchain.contracts.models import (
    NETWORK_CONFIG_KEY,
    ProjectStatus,
    agreement_key,
    member_key,
    project_key,
    registry_key,
    token_key,
)
from devchain.errors import (
    DevchainException,
    InvalidArguments,
    ProjectNotActive,
    ProjectNotFound,
    Unauthorized,
    UnknownOperation,
    UnknownSubmitter,
    UnsupportedValue,
)
from devchain.ledger.identity import Identity, Role
from devchain.ledger.transaction import Transaction

logger = logging.getLogger(__name__)


def scale_ms(ms: int, divisor: int) -> int:
    """Contract durations shrink by the network's time scale divisor."""
    if ms <= 0:
        return 0
    return max(1, ms // divisor)


@dataclass
class TxContext:
    state: object
    block_timestamp: int
    height: int
    tx: Transaction | None = None
    submitter: Identity | None = None
    time_scale_divisor: int = 1
    events: list[EventDraft] = field(default_factory=list)

    @property
    def project_id(self) -> str:
        return self.tx.project_id if self.tx else ""

    @property
    def args(self) -> dict:
        return self.tx.args if self.tx else {}

    @property
    def submitter_id(self) -> str:
        return self.submitter.member_id.hex()

    def scaled(self, ms: int) -> int:
        return scale_ms(ms, self.time_scale_divisor)

    def emit(self, contract, event_name, payload, audience=Audience.all_members, project_id=None):
        self.events.append(
            EventDraft(
                contract=contract,
                event_name=event_name,
                payload=payload,
                audience=audience,
                project_id=self.project_id if project_id is None else project_id,
            )
        )


def operation(func):
    """Mark a contract method as callable by transactions."""
    func.is_operation = True
    return func


class Contract:
    name = ""

    def __init__(self):
        self.operations = {
            attr: getattr(self, attr)
            for attr in dir(type(self))
            if getattr(getattr(type(self), attr), "is_operation", False)
        }

    def __call__(self, ctx: TxContext, op: str):
        handler = self.operations.get(op)
        if handler is None:
            raise UnknownOperation(f"Contract {self.name} has no operation {op}")
        return handler(ctx)

    def on_block(self, ctx: TxContext):
        pass

    def next_deadline(self, state) -> int | None:
        return None

    # shared checks

    def emit(self, ctx, event_name, payload, audience=Audience.all_members, project_id=None):
        ctx.emit(self.name, event_name, payload, audience, project_id)

    def load_project(self, ctx: TxContext, project_id: str | None = None) -> dict:
        project_id = ctx.project_id if project_id is None else project_id
        project = ctx.state.get(project_key(project_id))
        if project is None:
            raise ProjectNotFound(f"Project '{project_id}' does not exist")
        return project

    def save_project(self, ctx: TxContext, project: dict):
        ctx.state.put(project_key(project["project_id"]), project)

    def load_agreement(self, ctx: TxContext, project_id: str | None = None) -> dict:
        project_id = ctx.project_id if project_id is None else project_id
        return ctx.state.get(agreement_key(project_id))

    def require_active(self, project: dict):
        if project["status"] != ProjectStatus.active.value:
            raise ProjectNotActive(
                f"Project '{project['project_id']}' is {project['status']}, not Active"
            )

    def require_member(self, ctx: TxContext, project: dict) -> dict:
        member = ctx.state.get(member_key(project["project_id"], ctx.submitter_id))
        if member is None:
            raise Unauthorized(
                f"{ctx.submitter} is not a member of project '{project['project_id']}'"
            )
        return member

    def require_role(self, ctx: TxContext, *roles: Role):
        if ctx.submitter.role not in roles:
            allowed = "/".join(r.value for r in roles)
            raise Unauthorized(f"{ctx.submitter} may not do this, requires {allowed}")

    def next_seq(self, project: dict, kind: str) -> int:
        counters = project.setdefault("counters", {})
        counters[kind] = counters.get(kind, 0) + 1
        return counters[kind]


def lookup_identity(state, member_id: bytes | str) -> Identity | None:
    member_id = member_id.hex() if isinstance(member_id, bytes) else member_id
    doc = state.get(registry_key(member_id))
    return Identity.from_doc(doc) if doc else None


def registry_view(state):
    """Mapping of member_id -> public key backed by the registry documents."""
    return _RegistryView(state)


class _RegistryView:
    def __init__(self, state):
        self.state = state

    def get(self, member_id: bytes, default=None):
        doc = self.state.get(registry_key(member_id.hex()))
        if doc is None:
            return default
        return bytes.fromhex(doc["public_key"])


class ContractEngine:
    """Dispatches transactions to contracts and runs the per-block hooks."""

    def __init__(self, contracts=None):
        if contracts is None:
            from devchain.contracts import default_contracts

            contracts = default_contracts()
        self.contracts: dict[str, Contract] = {c.name: c for c in contracts}

    def time_scale_divisor(self, state) -> int:
        return (state.get(NETWORK_CONFIG_KEY) or {}).get("time_scale_divisor", 1)

    def apply_genesis(self, state, genesis_document: dict):
        """Seed registry, token allocations and network parameters from block 0."""
        for doc in genesis_document.get("identities", []):
            identity = Identity.from_doc(doc)
            state.put(registry_key(identity.member_id.hex()), identity.to_doc())
        for member_id, cents in genesis_document.get("allocations", {}).items():
            state.put(token_key(member_id), {"balance": cents})
        state.put(
            NETWORK_CONFIG_KEY,
            {
                "orderer": genesis_document.get("orderer"),
                "orgs": genesis_document.get("orgs", []),
                "time_scale_divisor": genesis_document.get("time_scale_divisor", 1),
            },
        )

    def execute(self, state, tx: Transaction, block_timestamp: int, height: int):
        """Run one transaction against `state`; returns (result, event drafts).

        Raises a ContractError when the operation is refused. The caller must
        then discard everything written to `state`.
        """
        contract = self.contracts.get(tx.contract)
        if contract is None:
            raise UnknownOperation(f"Unknown contract {tx.contract}")

        try:
            submitter = lookup_identity(state, tx.submitter)
        except UnsupportedValue:
            submitter = None
        if submitter is None:
            raise UnknownSubmitter(f"Submitter {tx.submitter.hex()} is not registered")

        ctx = TxContext(
            state=state,
            block_timestamp=block_timestamp,
            height=height,
            tx=tx,
            submitter=submitter,
            time_scale_divisor=self.time_scale_divisor(state),
        )
        try:
            result = contract(ctx, tx.operation)
        except DevchainException:
            raise
        except Exception as e:
            raise InvalidArguments(f"{tx.contract}.{tx.operation}: bad arguments ({e!r})")
        return result, ctx.events

    def on_block(self, state, block_timestamp: int, height: int) -> list[EventDraft]:
        ctx = TxContext(
            state=state,
            block_timestamp=block_timestamp,
            height=height,
            time_scale_divisor=self.time_scale_divisor(state),
        )
        for name in sorted(self.contracts):
            self.contracts[name].on_block(ctx)
        return ctx.events

    def next_deadline(self, state) -> int | None:
        """Earliest block timestamp at which some on_block hook has work to do."""
        deadlines = [
            d
            for d in (c.next_deadline(state) for c in self.contracts.values())
            if d is not None
        ]
        return min(deadlines) if deadlines else None
