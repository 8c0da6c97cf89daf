"""Exact arithmetic for integral Apollonian 3-circle packings."""
from .quadratic_core import Quadruple, apply_word, eval_Q, reflect, solve_w

__all__ = ["Quadruple", "apply_word", "eval_Q", "reflect", "solve_w"]
__version__ = "0.1.0"
