"""Minimal threaded JSON HTTP server for exercising the wire contracts."""

from __future__ import annotations

import json
import threading
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length)) if length else {}
        status, body = self.server.handle_request(self.path, payload)
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class RecordingServer(ThreadingHTTPServer):
    """Records every request and delegates the response to ``respond``.

    ``respond(path, payload, n)`` gets the 1-based request counter so tests
    can script fail-then-succeed sequences.
    """

    def __init__(self, respond):
        super().__init__(("127.0.0.1", 0), _Handler)
        self._respond = respond
        self.requests: list[tuple[str, dict]] = []
        self._lock = threading.Lock()

    def handle_request(self, path, payload):
        with self._lock:
            self.requests.append((path, payload))
            return self._respond(path, payload, len(self.requests))


@contextmanager
def serve(respond):
    server = RecordingServer(respond)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server, f"http://127.0.0.1:{server.server_address[1]}/"
    finally:
        server.shutdown()
        server.server_close()
