"""Fixed-point ring encoding and the plaintext classifier."""
