"""Configuration, experiments, result tables and the command-line entry point."""
