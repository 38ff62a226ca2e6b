from flask import Blueprint, Response

from devchain.api.routes import chain_client

castore = Blueprint("castore", __name__)


@castore.route("/<cid>", methods=["GET"])
def show(cid):
    return Response(chain_client().castore_get(cid), mimetype="application/octet-stream")
