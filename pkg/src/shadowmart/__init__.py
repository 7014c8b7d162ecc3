"""Exact shadows of finite atomic measures and shadow martingales."""

__version__ = "0.1.0"
