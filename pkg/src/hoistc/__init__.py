"""Flip-hoisting optimiser and exact BDD inference for a small discrete probabilistic language."""

from .lang import assign_flip_ids, flip_count, param_census
from .syntax import parse, to_text

__all__ = ["assign_flip_ids", "flip_count", "param_census", "parse", "to_text"]
