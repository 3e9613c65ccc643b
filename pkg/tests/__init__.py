"""Tests for SonicGesture."""
