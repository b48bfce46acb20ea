"""Transit social-media sentiment and topic analysis toolkit."""

__version__ = "0.1.0"
