"""Evaluation harness: metrics, GOP pipeline, container format, BD-rate, CLI."""
