"""Test suite for privcon."""
