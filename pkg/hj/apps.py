from django.apps import AppConfig


class HjConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'hj'
    verbose_name = 'Hamilton-Jacobi equations'

    def ready(self):
        from . import pullback  # noqa: F401  registers the catalog maps
