"""Time-series persistence and the query math behind the dashboard."""

from .store import QueryError, SeriesStore, StatsSummary

__all__ = ["QueryError", "SeriesStore", "StatsSummary"]
