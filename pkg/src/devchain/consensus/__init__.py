"""Single-orderer batching, block validation and replay across organization peers.

Submodules are imported directly (`devchain.consensus.peer`, ...) since the
contract engine depends on `devchain.consensus.events`.
"""
