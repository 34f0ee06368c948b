"""Hourly emergency-department arrival forecasting toolkit."""

__version__ = "0.1.0"
