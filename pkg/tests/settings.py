# Minimal settings for running the optimal_balance tests

SECRET_KEY = "test-secret-key"
DEBUG = True

INSTALLED_APPS = [
    "optimal_balance",
]

TASKS = {
    "default": {
        "BACKEND": "optimal_balance.backend.ThreadPoolBackend",
        "OPTIONS": {"WORKERS": 2},
    },
}

OPTIMAL_BALANCE = {
    "MAX_SERIES_ORDER": 8,
}

USE_TZ = True
TIME_ZONE = "UTC"
