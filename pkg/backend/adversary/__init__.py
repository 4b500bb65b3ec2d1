"""Pauli deviations of the server, their exact effect and the trap bound."""
