"""Node processes and their clients.

`daemon` runs the orderer and peer servers, `rpc` is what they answer,
`client` talks to them and `trail` reads a project's history off the chain.
"""

from devchain.node.client import AsyncNodeClient, LocalClient, NodeClient, Signer
from devchain.node.daemon import OrdererNode, PeerNode, serve, start_node
from devchain.node.trail import TrailEntry, audit_trail, chain_block_docs

__all__ = [
    "AsyncNodeClient",
    "LocalClient",
    "NodeClient",
    "OrdererNode",
    "PeerNode",
    "Signer",
    "TrailEntry",
    "audit_trail",
    "chain_block_docs",
    "serve",
    "start_node",
]
