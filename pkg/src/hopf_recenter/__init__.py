"""Decorated trees, their Hopf-algebraic operations and the recentering map of the Malliavin derivative."""

from .lincomb import LinComb
from .trees import DecoratedTree, Noise, Parameters, parse_tree, to_string

__all__ = ["DecoratedTree", "LinComb", "Noise", "Parameters", "parse_tree", "to_string"]
