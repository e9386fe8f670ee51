from django.apps import AppConfig


class OptimalBalanceConfig(AppConfig):
    name = "optimal_balance"
    verbose_name = "Optimal balance"
