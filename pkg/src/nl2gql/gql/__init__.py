"""nGQL subset: lexer, parser, renderer and embedded executor."""

from .executor import Executor, execute, run
from .parser import is_valid, parse, validate
from .render import render
from .table import NULL_TEXT, ResultTable

__all__ = ["Executor", "execute", "run", "is_valid", "parse", "validate", "render",
           "NULL_TEXT", "ResultTable"]
