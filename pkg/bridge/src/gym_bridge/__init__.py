"""Evaluator bridge: serves robot fitness requests over stdio JSON lines."""

__version__ = "0.1.0"
