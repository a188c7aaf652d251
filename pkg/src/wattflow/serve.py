"""Run ASGI apps on background uvicorn servers (tests, CLI, bench harness)."""

from __future__ import annotations

import threading
import time

import uvicorn


class ServerHandle:
    def __init__(self, server: uvicorn.Server, thread: threading.Thread, port: int):
        self.server = server
        self.thread = thread
        self.port = port

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def stop(self):
        self.server.should_exit = True
        self.thread.join(timeout=10)


def serve_in_thread(app, host: str = "127.0.0.1", port: int = 0) -> ServerHandle:
    """Start uvicorn on a background thread; port 0 picks a free one."""
    config = uvicorn.Config(app, host=host, port=port, log_level="warning", access_log=False)
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 15
    while not server.started:
        if time.monotonic() > deadline or not thread.is_alive():
            raise RuntimeError("uvicorn server failed to start")
        time.sleep(0.01)
    actual = server.servers[0].sockets[0].getsockname()[1]
    return ServerHandle(server, thread, actual)
