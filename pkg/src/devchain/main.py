"""HTTP gateway: a read-mostly JSON view of one peer.

Writes are relayed as already signed transactions; the gateway never holds
keys. Run with `flask --app devchain.main run` or `devchain gateway`.
"""

import json

from flask import Blueprint, Flask, jsonify
from flask_cors import CORS
from werkzeug.exceptions import HTTPException

from devchain import config
from devchain.api.routes.castore import castore
from devchain.api.routes.chain import chain
from devchain.api.routes.projects import projects
from devchain.errors import DevchainException
from devchain.logs import configure_logging
from devchain.node.client import NodeClient


def create_app(client=None) -> Flask:
    app = Flask(__name__)
    app.config["DEBUG"] = config.flask_debug
    app.extensions["devchain_client"] = client or NodeClient(config.gateway_peer_endpoint)

    CORS(app)

    api = Blueprint("api", __name__, url_prefix="/api")
    api.register_blueprint(chain)
    api.register_blueprint(projects, url_prefix="/projects")
    api.register_blueprint(castore, url_prefix="/castore")
    app.register_blueprint(api)

    @app.after_request
    def set_headers(response):
        response.headers["Referrer-Policy"] = "no-referrer"
        return response

    @app.errorhandler(DevchainException)
    def handle_devchain_exception(error):
        response = jsonify(error.to_dict())
        response.status_code = error.status_code
        return response

    @app.errorhandler(HTTPException)
    def handle_http_exception(error):
        """Return JSON instead of HTML for HTTP errors."""
        response = error.get_response()
        response.data = json.dumps(
            {
                "code": error.code,
                "name": error.name,
                "description": error.description,
            }
        )
        response.content_type = "application/json"
        return response

    return app


if __name__ == "__main__":
    configure_logging()
    create_app().run(host="0.0.0.0", port=config.gateway_port)
