"""Aggregators that decide which client updates enter the global model."""
