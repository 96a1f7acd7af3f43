"""Sweeps, worst-case search, acceptance suite and report writers."""
