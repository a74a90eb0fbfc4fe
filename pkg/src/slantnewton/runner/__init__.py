"""Batch execution of solves."""
