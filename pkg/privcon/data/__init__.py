"""Bundled graph instances."""
