"""Simulation, learning and experiment modules."""
