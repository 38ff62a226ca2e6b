import json

from flask import Blueprint, Response

from devchain.api.routes import chain_client
from devchain.contracts.models import project_key
from devchain.node.trail import audit_trail, chain_block_docs

projects = Blueprint("projects", __name__)


@projects.route("/<project_id>", methods=["GET"])
def show(project_id):
    doc = chain_client().query_state(project_key(project_id))
    return Response(json.dumps(doc), mimetype="application/json")


@projects.route("/<project_id>/trail", methods=["GET"])
def trail(project_id):
    client = chain_client()
    client.query_state(project_key(project_id))
    entries = audit_trail(chain_block_docs(client), project_id)
    return Response(json.dumps([e.to_doc() for e in entries]), mimetype="application/json")
