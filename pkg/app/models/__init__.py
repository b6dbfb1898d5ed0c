"""Grid and field containers shared by every computational module."""
from app.models.grid import Field, ModeStack, PolarGrid, analyze, integrate, make_grid, synthesize

__all__ = ["Field", "ModeStack", "PolarGrid", "analyze", "integrate", "make_grid", "synthesize"]
