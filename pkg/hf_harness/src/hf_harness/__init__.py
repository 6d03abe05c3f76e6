"""Transformer fine-tuning harness over the deletion-discussion corpus."""

__version__ = "0.1.0"
