from django.apps import AppConfig


class TimesepConfig(AppConfig):
    name = 'timesep'
