"""Model poisoning attacks and check-score manipulation."""
