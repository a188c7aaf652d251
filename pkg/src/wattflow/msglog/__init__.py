"""Embedded partitioned message log: topics, keyed routing, consumer groups."""

from .broker import (
    Broker,
    DuplicateTopicError,
    LogMessage,
    MsgLogError,
    Topic,
    TopicTail,
    UnknownTopicError,
    fnv1a_64,
    partition_for,
)
from .groups import (
    Consumer,
    ConsumerRevoked,
    NotOwnedError,
    assign_partitions,
    group_lag,
    group_members,
)

TOPIC_RECORDS = "records"
TOPIC_GROUPED = "grouped-records"
TOPIC_AGGREGATED = "aggregated-records"
TOPIC_CONFIGURATION = "configuration"

__all__ = [
    "Broker",
    "Consumer",
    "ConsumerRevoked",
    "DuplicateTopicError",
    "LogMessage",
    "MsgLogError",
    "NotOwnedError",
    "Topic",
    "TopicTail",
    "UnknownTopicError",
    "assign_partitions",
    "fnv1a_64",
    "group_lag",
    "group_members",
    "partition_for",
    "TOPIC_RECORDS",
    "TOPIC_GROUPED",
    "TOPIC_AGGREGATED",
    "TOPIC_CONFIGURATION",
]
