from flask import current_app


def chain_client():
    """The ChainClient the gateway was created with."""
    return current_app.extensions["devchain_client"]
