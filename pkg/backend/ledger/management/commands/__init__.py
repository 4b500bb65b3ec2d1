"""Command-line entry points: protocol runs, distinguishers, attack sweeps and self-checks."""
