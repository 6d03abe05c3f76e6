"""Multilingual deletion-discussion corpus toolkit and stance baselines."""

__version__ = "0.1.0"
