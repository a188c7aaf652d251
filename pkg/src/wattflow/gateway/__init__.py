"""API gateway and static file server for the dashboard."""

from .app import RouteTable, create_app, load_config

__all__ = ["RouteTable", "create_app", "load_config"]
