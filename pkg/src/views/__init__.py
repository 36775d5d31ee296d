from flask_restful import Api

from src.modules.victim import Victim

from .predict_views import ClassesResource, PredictResource


def register_resources(api: Api, victim: Victim):
    api.add_resource(PredictResource, '/predict',
                     resource_class_kwargs={'victim': victim})

    api.add_resource(ClassesResource, '/classes',
                     resource_class_kwargs={'victim': victim})
