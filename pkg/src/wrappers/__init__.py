"""Wrappers turning catalog entries and user overrides into core objects."""
from .example_wrapper import ExampleWrapper

__all__ = ["ExampleWrapper"]
