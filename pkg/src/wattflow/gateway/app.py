"""Backends-for-frontends gateway: one origin for the SPA and every API.

API calls are forwarded verbatim to their owning service — bodies pass
through byte-identical, and with several instances of a service registered
the gateway round-robins across them. Everything that is not an API call
serves the compiled frontend, falling back to the index document so
client-side routes survive a reload.
"""

from __future__ import annotations

import itertools
import json
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

import httpx
from fastapi import FastAPI, Request, Response
from fastapi.responses import FileResponse, JSONResponse

_HOP_BY_HOP = {
    "connection", "keep-alive", "proxy-authenticate", "proxy-authorization",
    "te", "trailers", "transfer-encoding", "upgrade", "host", "content-length",
}

_PLACEHOLDER = b"""<!doctype html>
<html><head><title>wattflow</title></head>
<body><h1>wattflow gateway</h1>
<p>No frontend bundle found. Build it and point --static-root at the output,
or use the /api endpoints directly.</p></body></html>
"""


@dataclass
class RouteTable:
    """Prefix routing plus round-robin upstream selection per service."""

    upstreams: dict[str, list[str]]
    routes: dict[str, str] = field(
        default_factory=lambda: {"/api/hierarchy": "registry", "/api/power": "history"}
    )
    _counters: dict[str, itertools.count] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def service_for(self, path: str) -> str | None:
        for prefix, service in self.routes.items():
            if path == prefix or path.startswith(prefix + "/") or path.startswith(prefix + "?"):
                return service
        return None

    def next_upstream(self, service: str) -> str | None:
        addresses = self.upstreams.get(service) or []
        if not addresses:
            return None
        with self._lock:
            counter = self._counters.setdefault(service, itertools.count())
            return addresses[next(counter) % len(addresses)]


def load_config(path: str | Path) -> dict:
    with open(path, "rb") as f:
        return json.loads(f.read())


def create_app(
    upstreams: dict[str, list[str]],
    static_root: str | Path | None = None,
    timeout_s: float = 10.0,
) -> FastAPI:
    table = RouteTable(upstreams=upstreams)
    root = Path(static_root) if static_root else None
    # no keep-alive pooling: connections must not outlive one event loop
    client = httpx.AsyncClient(
        timeout=timeout_s, limits=httpx.Limits(max_keepalive_connections=0)
    )

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        await client.aclose()

    app = FastAPI(title="wattflow gateway", docs_url=None, redoc_url=None, lifespan=lifespan)

    @app.api_route("/api/{rest:path}", methods=["GET", "PUT", "POST", "DELETE"])
    async def forward(request: Request, rest: str):
        path = "/api/" + rest
        service = table.service_for(path)
        if service is None:
            return JSONResponse(status_code=404, content={"error": f"unknown route {path}"})
        upstream = table.next_upstream(service)
        if upstream is None:
            return JSONResponse(
                status_code=502, content={"error": f"no upstream configured for {service}"}
            )
        url = upstream.rstrip("/") + path
        body = await request.body() if request.method in ("PUT", "POST") else None
        try:
            upstream_response = await client.request(
                request.method,
                url,
                params=request.query_params,
                content=body,
                headers={
                    k: v for k, v in request.headers.items() if k.lower() not in _HOP_BY_HOP
                },
            )
        except httpx.HTTPError as e:
            return JSONResponse(
                status_code=502,
                content={"error": f"upstream {service} unreachable: {e.__class__.__name__}"},
            )
        return Response(
            content=upstream_response.content,
            status_code=upstream_response.status_code,
            media_type=upstream_response.headers.get("content-type"),
        )

    @app.get("/{path:path}")
    def static(path: str):
        if root is None:
            return Response(content=_PLACEHOLDER, media_type="text/html")
        target = (root / path).resolve() if path else root / "index.html"
        try:
            inside = target.is_relative_to(root.resolve())
        except ValueError:
            inside = False
        if path and inside and target.is_file():
            return FileResponse(target)
        index = root / "index.html"
        if index.is_file():
            return FileResponse(index)  # SPA fallback: client-side routing
        return Response(content=_PLACEHOLDER, media_type="text/html")

    return app
