"""Services package for the optimizer methods."""
