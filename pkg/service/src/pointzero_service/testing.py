"""Helpers for exercising a real server in-process (tests, deploy checks)."""

from __future__ import annotations

import contextlib
import threading
import time
from typing import Iterator

import uvicorn
from fastapi import FastAPI

__all__ = ["serve"]


class _ThreadedServer(uvicorn.Server):
    def install_signal_handlers(self) -> None:  # runs outside the main thread
        pass


@contextlib.contextmanager
def serve(app: FastAPI, timeout: float = 15.0) -> Iterator[str]:
    """Serve app on 127.0.0.1 with an OS-assigned port; yields the base URL."""
    server = _ThreadedServer(uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + timeout
    while not server.started:
        if not thread.is_alive():
            raise RuntimeError("server thread died during startup")
        if time.monotonic() > deadline:
            server.should_exit = True
            raise RuntimeError(f"server did not start within {timeout}s")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=10.0)
