"""Tests for configuration loading system."""
