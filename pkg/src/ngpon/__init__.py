"""Capacity, delay, and simulation toolkit for next-generation passive
optical access/metro networks."""

from . import capacity, delay, model, routing, simulator

__all__ = ["model", "routing", "capacity", "delay", "simulator"]
__version__ = "0.1.0"
