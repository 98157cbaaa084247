"""Post-hoc figure rendering for simulator CSV artifacts."""

__version__ = "0.1.0"
