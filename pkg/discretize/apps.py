from django.apps import AppConfig


class DiscretizeConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'discretize'
    verbose_name = 'Point clouds and geodesic graphs'
