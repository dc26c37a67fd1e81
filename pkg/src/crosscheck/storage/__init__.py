"""Persistent history of experiment runs."""
