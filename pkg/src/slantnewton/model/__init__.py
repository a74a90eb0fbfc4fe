"""Discrete optimality system and benchmark problems."""
