"""Gauge-field workbench for the centrally (pseudo-)extended Poincare group."""

__version__ = "0.1.0"
