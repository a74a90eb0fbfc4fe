"""Output files and problem documents."""
