"""Management utilities for the ledger application."""
