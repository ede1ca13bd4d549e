from django.apps import AppConfig


class BusybotConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "busybot"
    verbose_name = "BusyBoard Interact-Reason-Plan"
