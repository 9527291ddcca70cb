"""Content-based related-article recommendation with online-evaluation tooling."""

__version__ = "0.1.0"
