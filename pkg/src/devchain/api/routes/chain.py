import json

from flask import Blueprint, Response, request

from devchain.api.routes import chain_client
from devchain.consensus.events import Audience
from devchain.consensus.orderer import Rejected
from devchain.errors import InvalidArguments, NotFound, error_for_code
from devchain.ledger.encoding import from_hex
from devchain.ledger.transaction import Transaction

chain = Blueprint("chain", __name__)


def as_json(doc, status=200):
    return Response(json.dumps(doc), status=status, mimetype="application/json")


@chain.route("/status", methods=["GET"])
def status():
    client = chain_client()
    return as_json({"height": client.head_height(), "state_digest": client.state_digest()})


@chain.route("/state/<path:key>", methods=["GET"])
def state(key):
    return as_json(chain_client().query_state(key))


@chain.route("/keys", methods=["GET"])
def keys():
    return as_json(chain_client().list_keys(request.args.get("prefix", "")))


@chain.route("/blocks/<int:height>", methods=["GET"])
def block(height):
    return as_json(chain_client().query_block(height))


@chain.route("/events", methods=["GET"])
def events():
    since = request.args.get("since", 0, type=int)
    try:
        audience = Audience(request.args["audience"]) if "audience" in request.args else None
    except ValueError:
        raise InvalidArguments(f"Unknown audience {request.args['audience']!r}")
    project_id = request.args.get("project_id")

    found = chain_client().query_events(since, audience)
    return as_json([e.to_doc() for e in found if project_id in (None, e.project_id)])


@chain.route("/transactions", methods=["POST"])
def submit():
    """Relay a transaction signed by the caller; the gateway holds no keys."""
    tx = Transaction.from_doc(request.get_json(force=True))
    outcome = chain_client().submit(tx)
    if isinstance(outcome, Rejected):
        raise error_for_code(outcome.reason, outcome.message)
    return as_json(outcome.to_doc(), status=202)


@chain.route("/transactions/<tx_id>", methods=["GET"])
def transaction(tx_id):
    result = chain_client().tx_result(from_hex(tx_id, 32, "tx_id"))
    if result is None:
        raise NotFound(f"Transaction {tx_id} is not committed")
    return as_json(result)
