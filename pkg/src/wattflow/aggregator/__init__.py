"""Continuous hierarchical aggregation: streaming core of the history service."""

from .core import (
    AggregationHistory,
    compute_stats,
    fan_out,
    prune_histories,
    update_history,
)
from .metrics import Counters, create_metrics_app, parse_metrics
from .worker import GROUP_ID, AggregatorWorker, wait_for_group

__all__ = [
    "AggregationHistory",
    "AggregatorWorker",
    "Counters",
    "GROUP_ID",
    "compute_stats",
    "create_metrics_app",
    "fan_out",
    "parse_metrics",
    "prune_histories",
    "update_history",
    "wait_for_group",
]
