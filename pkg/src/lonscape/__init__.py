"""Local optima network sampling and analysis for modular robot design landscapes."""

__version__ = "0.1.0"
