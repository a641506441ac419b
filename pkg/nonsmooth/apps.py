from django.apps import AppConfig


class NonsmoothConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'nonsmooth'
    verbose_name = 'Nonsmooth analysis'
