"""Experiment harness: initial data, error reports, CSV/figure output, CLI."""
