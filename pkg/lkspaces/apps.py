from django.apps import AppConfig


class LKSpacesConfig(AppConfig):
    name = 'lkspaces'
    verbose_name = 'Lorentz-Karamata spaces'
