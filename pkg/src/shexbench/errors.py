"""Exceptions shared across modules."""


class EmptyDatasetError(ValueError):
    """An aggregation was requested over zero items."""
