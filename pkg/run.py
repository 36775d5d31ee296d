from typing import Optional

from flask import Flask
from flask_restful import Api

from config import BaseConfig
from src import app_manager, configure_logging
from src.modules.victim import Victim
from src.views import register_resources


def create_app(victim: Optional[Victim] = None) -> Flask:
    """
    Builds the application serving a victim over the wire protocol. Without an
    explicit victim, the one named by TABLE_ATTACK_VICTIM is loaded.
    """
    app = Flask(__name__)

    app.config['MAX_CONTENT_LENGTH'] = BaseConfig.MAX_CONTENT_LENGTH
    app.url_map.strict_slashes = False

    api = Api(app)

    register_resources(api, victim or app_manager.get_victim())

    return app


if __name__ == "__main__":
    configure_logging()
    app = create_app()
    app.run(BaseConfig.IP, BaseConfig.PORT, debug=False)
