"""Numerical core: solvers, baselines, generators and metrics."""
