"""Command line surface: argument parsing, file formats and report models."""
