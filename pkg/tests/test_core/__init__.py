"""Tests for the core verification modules."""
