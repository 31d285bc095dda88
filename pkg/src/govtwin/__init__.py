"""Governed building twin: a deterministic ledger with DAO governance, a
discrete-time building simulator, threshold-driven automation, telemetry
analytics, and an HTTP/CLI surface over all of it."""

__version__ = "0.1.0"
