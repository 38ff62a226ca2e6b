"""Project history reconstructed from the chain alone."""

from dataclasses import dataclass

PHASES = {
    ("project", "create_project"): "Initiation",
    ("project", "add_member"): "Initiation",
    ("project", "accept_terms"): "Initiation",
    ("project", "amend_agreement"): "Initiation",
    ("development", "record_plan"): "Planning",
    ("development", "record_repo_head"): "Development",
    ("cicd", "record_build"): "Integration",
    ("cicd", "attest_gate"): "Testing",
    ("cicd", "deploy"): "Deployment",
    ("monitoring", "record_metric"): "Monitoring",
    ("monitoring", "raise_alert"): "Monitoring",
    ("payment", "pay_installment"): "Payment",
    ("project", "close_project"): "Closure",
}

# args worth showing per operation; everything else stays on chain
DETAIL_ARGS = {
    "accept_terms": ("side",),
    "record_plan": ("kind", "artifact_cid"),
    "record_repo_head": ("commit_cid",),
    "attest_gate": ("name", "version", "quality", "security", "compliance"),
    "deploy": ("name", "version", "target"),
    "record_metric": ("metric_name", "scaled_value", "scale"),
    "raise_alert": ("severity", "description"),
}


@dataclass(frozen=True)
class TrailEntry:
    height: int
    index: int
    block_timestamp: int
    phase: str
    contract: str
    operation: str
    submitter: str
    tx_id: str
    detail: dict

    def to_doc(self) -> dict:
        return {
            "block_timestamp": self.block_timestamp,
            "contract": self.contract,
            "detail": self.detail,
            "height": self.height,
            "index": self.index,
            "operation": self.operation,
            "phase": self.phase,
            "submitter": self.submitter,
            "tx_id": self.tx_id,
        }

    def __str__(self):
        detail = " ".join(f"{k}={v}" for k, v in self.detail.items())
        return (
            f"{self.height:>6}/{self.index:<3} {self.phase:<12} "
            f"{self.contract}.{self.operation} by {self.submitter[:12]} {detail}".rstrip()
        )


def _detail(operation: str, args: dict) -> dict:
    if operation == "record_build":
        build = args.get("build", {})
        return {k: build.get(k) for k in ("name", "version", "review", "unit", "integration")}
    return {k: args[k] for k in DETAIL_ARGS.get(operation, ()) if k in args}


def audit_trail(block_docs, project_id: str) -> list[TrailEntry]:
    """Committed phase actions of one project in block order.

    `block_docs` are block documents carrying a `validity` list, as served
    by query_block; transactions the chain marked invalid are skipped.
    """
    entries = []
    for doc in block_docs:
        validity = doc.get("validity", [])
        for index, tx in enumerate(doc["txs"]):
            if tx["project_id"] != project_id or not (index < len(validity) and validity[index]):
                continue
            phase = PHASES.get((tx["contract"], tx["operation"]))
            if phase is None:
                continue
            entries.append(
                TrailEntry(
                    height=doc["height"],
                    index=index,
                    block_timestamp=doc["block_timestamp"],
                    phase=phase,
                    contract=tx["contract"],
                    operation=tx["operation"],
                    submitter=tx["submitter"],
                    tx_id=tx["tx_id"],
                    detail=_detail(tx["operation"], tx["args"]),
                )
            )
    return entries


def chain_block_docs(client):
    """Every block of the chain with validity flags, oldest first."""
    for height in range(client.head_height() + 1):
        yield client.query_block(height)
