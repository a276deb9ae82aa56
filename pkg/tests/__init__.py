"""Test suite for the jordan_stability package."""
