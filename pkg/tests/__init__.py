"""Wavebreak test suite."""
