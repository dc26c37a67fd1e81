"""Crosscheck - robust secure aggregation with cross-client validation, at desk scale."""

__version__ = "0.1.0"
