"""Experiment orchestration: splits, pipelines, reports."""
