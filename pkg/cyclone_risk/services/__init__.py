from .hurdat2 import Hurdat2Parser, parse_hurdat2

__all__ = ["Hurdat2Parser", "parse_hurdat2"]
