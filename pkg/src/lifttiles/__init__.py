"""Simulator, controller, planner and control service for arrays of
spring-retracted inflatable linear actuators (15-150 cm stroke)."""

__version__ = "0.1.0"
