"""Geography of emotion: tract-level sentiment, check-ins and mobility."""

__version__ = "0.1.0"
