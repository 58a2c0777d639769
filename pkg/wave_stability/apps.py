from django.apps import AppConfig


class WaveStabilityConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "wave_stability"
    verbose_name = "Klein-Gordon wave stability"
