"""Numerical core: operator, functionals, ground states, evolution and monitors."""
from app.utils.initial_data import InitialDataFactory
from app.utils.weights import WeightFactory

__all__ = ["InitialDataFactory", "WeightFactory"]
