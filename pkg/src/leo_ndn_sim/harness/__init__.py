"""Scenario runner, experiments and metrics."""
