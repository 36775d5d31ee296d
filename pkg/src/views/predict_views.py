import logging

from flask_restful import Resource, reqparse

from config import BaseConfig
from src.modules import InputError
from src.modules.victim import UnknownClassError, Victim
from src.services.victim_service import describe_victim, predict_column

logger = logging.getLogger(__name__)


def _unconverted(value):
    return value


class PredictResource(Resource):
    def __init__(self, victim: Victim):
        self.victim = victim
        self.parser = reqparse.RequestParser(bundle_errors=True)
        super().__init__()

    def post(self):
        self.parser.add_argument(
            'table', type=dict, required=True, help='No table provided', location='json'
        )
        self.parser.add_argument(
            'column_index', type=_unconverted, required=True, help='No column_index provided', location='json'
        )
        self.parser.add_argument(
            'classes', type=str, action='append', required=True, help='No classes provided',
            location='json'
        )
        args = self.parser.parse_args()

        try:
            return predict_column(self.victim, args['table'], args['column_index'], args['classes'])
        except UnknownClassError as e:
            return {
                "message": BaseConfig.RESPONSE_UNKNOWN_CLASS,
                "error": "unknown_class",
                "unknown": e.classes,
            }, 400
        except InputError as e:
            return {
                "message": f"{BaseConfig.RESPONSE_INVALID_TABLE}: {e.message}"
            }, 400
        except Exception as e:
            logger.exception("Prediction failed.")
            return {
                "message": f"{BaseConfig.RESPONSE_PREDICT_FAILED}: {str(e)}"
            }, 500


class ClassesResource(Resource):
    def __init__(self, victim: Victim):
        self.victim = victim
        super().__init__()

    def post(self):
        return describe_victim(self.victim)
