"""Core package: preference systems, stable matching algorithms and reductions."""
