"""Utility functions for logging and run sessions."""
