"""Cloze-style program repair driven by project-local code ingredients."""

__version__ = "0.1.0"
