"""Packaged reference data (gesture catalogue)."""
