"""Simulated 3-party replicated secret sharing and its ideal functionalities."""
