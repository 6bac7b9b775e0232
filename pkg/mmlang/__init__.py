"""
mmlang - compiler, pre-linker and interpreter for a small object-oriented
language with C++-style object layout and symmetric multimethods.
"""

__version__ = "0.1.0"
