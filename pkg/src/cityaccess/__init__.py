"""Feedback-controlled city access with ride-sharing, compliance bonds on
a permissioned DAG ledger, and tyre-wear particulate accounting."""

__version__ = "0.1.0"
