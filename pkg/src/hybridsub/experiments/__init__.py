"""Experiment harness: method dispatch and seeded sweeps."""
