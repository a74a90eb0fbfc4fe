"""Tests for slantnewton."""
