"""Configuration service: versioned sensor hierarchy with live change events."""

from .model import (
    HierarchyValidationError,
    SensorHierarchy,
    UnknownSensorError,
    default_hierarchy,
    parse_hierarchy,
)
from .service import Registry, decode_event, encode_event
from .watch import ConfigWatcher

__all__ = [
    "ConfigWatcher",
    "HierarchyValidationError",
    "Registry",
    "SensorHierarchy",
    "UnknownSensorError",
    "decode_event",
    "default_hierarchy",
    "encode_event",
    "parse_hierarchy",
]
