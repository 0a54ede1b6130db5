"""Config-driven command-line runner."""
