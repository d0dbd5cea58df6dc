"""Loopback HTTP oracle: serves any local detector over the remote wire
format (POST body = raw page HTML, response = JSON {"score": ...}).

The optional X-Page-Url request header supplies the page's origin URL so
host-relative features score identically to in-process extraction; without
it a fixed synthetic origin is used.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .dom import parse_html

DEFAULT_ORIGIN = "http://oracle-stub.test/"


def make_server(detector, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length)
            url = self.headers.get("X-Page-Url") or DEFAULT_ORIGIN
            try:
                page = parse_html(body, url)
                score = detector.score(page)
            except Exception as exc:  # never let one request kill the stub
                self._reply(500, {"error": str(exc)})
                return
            self._reply(200, {"score": score})

        def _reply(self, status: int, payload: dict):
            data = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *args):  # quiet by default
            pass

    return ThreadingHTTPServer((host, port), Handler)


def serve_forever(detector, host: str = "127.0.0.1", port: int = 8731):
    server = make_server(detector, host, port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


class BackgroundStub:
    """Context manager running the stub on an ephemeral port (tests)."""

    def __init__(self, detector, host: str = "127.0.0.1"):
        self.server = make_server(detector, host, 0)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}/"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc_info):
        self.server.shutdown()
        self.server.server_close()
        return False
