from django.apps import AppConfig


class SpacetimeConfig(AppConfig):
    name = 'spacetime'
