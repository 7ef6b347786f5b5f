"""utils module."""
