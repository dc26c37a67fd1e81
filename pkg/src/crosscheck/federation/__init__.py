"""Federated training driver: populations, shifts and the round loop."""
