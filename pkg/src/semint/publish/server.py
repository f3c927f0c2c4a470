"""Running the HTTP service."""

from __future__ import annotations

import errno
import logging
import socket
import threading
import time

import uvicorn

from ..config import Config
from ..errors import PortInUse
from ..pipeline import Middleware
from .app import create_app

logger = logging.getLogger(__name__)


def check_port(host: str, port: int) -> None:
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as sock:
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind((host, port))
        except OSError as exc:
            if exc.errno in (errno.EADDRINUSE, errno.EACCES):
                raise PortInUse(port) from exc
            raise


class ServiceHandle:
    """A service running on a background thread."""

    def __init__(self, server: uvicorn.Server, thread: threading.Thread, middleware: Middleware):
        self.server = server
        self.thread = thread
        self.middleware = middleware

    @property
    def port(self) -> int:
        sockets = self.server.servers[0].sockets if self.server.servers else []
        return sockets[0].getsockname()[1] if sockets else self.server.config.port

    @property
    def url(self) -> str:
        return f"http://{self.server.config.host}:{self.port}"

    def stop(self, timeout: float = 10.0) -> None:
        self.server.should_exit = True
        self.thread.join(timeout)


def serve(cfg: Config, block: bool = True) -> ServiceHandle | None:
    """Start the service; blocks until shutdown unless ``block`` is False.

    Uvicorn handles SIGINT/SIGTERM and drains in-flight requests before exit.
    """
    if cfg.port:
        check_port(cfg.host, cfg.port)
    mw = Middleware.from_config(cfg, data_dir=cfg.data_dir)
    app = create_app(mw)
    server = uvicorn.Server(uvicorn.Config(app, host=cfg.host, port=cfg.port, log_level="info"))
    if block:
        server.run()
        return None
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if not thread.is_alive() or time.monotonic() > deadline:
            raise RuntimeError("service failed to start")
        time.sleep(0.02)
    return ServiceHandle(server, thread, mw)
