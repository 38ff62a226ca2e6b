"""devchain package.

permissioned ledger toolkit for distributed DevOps: phase contracts, a content
store, a CI runner that anchors its builds on chain, and a benchmark harness
"""

from __future__ import annotations

__all__: list[str] = []
