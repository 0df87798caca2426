"""Experiment orchestration and the command-line surface."""
