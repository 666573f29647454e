"""Static-file server with an action-log ingestion endpoint.

Serves a rendered app directory (GET /, GET /models/*, GET /windows/*) and
accepts POST /log with one action-trace entry per request, appending it to
server.trace.ndjson. Appends are serialized through a single lock so
concurrent posts never interleave within a line.
"""

from __future__ import annotations

import functools
import json
import threading
from http.server import SimpleHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

LOG_FILENAME = "server.trace.ndjson"

_VALID_RESULTS = {"TRANSITIONED", "REJECTED", "RECORDED"}


def validate_log_entry(entry) -> str | None:
    """None when the entry is a well-formed trace entry, else the problem."""
    if not isinstance(entry, dict):
        return "entry must be a JSON object"
    if not isinstance(entry.get("seq"), int):
        return "entry needs an integer 'seq'"
    if not isinstance(entry.get("state"), str):
        return "entry needs a string 'state'"
    event = entry.get("event")
    if event is not None:
        if not isinstance(event, dict) or "kind" not in event or "element" not in event:
            return "event must be null or carry 'kind' and 'element'"
    outcome = entry.get("outcome")
    if not isinstance(outcome, dict) or outcome.get("result") not in _VALID_RESULTS:
        return "outcome.result must be TRANSITIONED, REJECTED or RECORDED"
    return None


class AppRequestHandler(SimpleHTTPRequestHandler):
    server: AppServer  # narrowed for the log members

    def do_POST(self):  # noqa: N802 (http.server naming)
        if self.path.rstrip("/") != "/log":
            self.send_error(404, "unknown endpoint")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = self.rfile.read(length)
            entry = json.loads(body.decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            self.send_error(400, "body is not valid JSON")
            return
        problem = validate_log_entry(entry)
        if problem is not None:
            self.send_error(400, problem)
            return
        line = json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n"
        with self.server.log_lock:
            with open(self.server.log_path, "ab") as sink:
                sink.write(line.encode("utf-8"))
        self.send_response(204)
        self.end_headers()

    def log_message(self, format, *args):  # noqa: A002 (stdlib signature)
        if self.server.verbose:
            super().log_message(format, *args)


class AppServer(ThreadingHTTPServer):
    def __init__(self, directory: Path | str, port: int = 0, verbose: bool = False):
        self.app_directory = Path(directory)
        self.log_path = self.app_directory / LOG_FILENAME
        self.log_lock = threading.Lock()
        self.verbose = verbose
        handler = functools.partial(AppRequestHandler, directory=str(self.app_directory))
        super().__init__(("127.0.0.1", port), handler)


def serve_app(directory: Path | str, port: int, verbose: bool = True) -> AppServer:
    """Bind and return the server; caller drives serve_forever()."""
    return AppServer(directory, port=port, verbose=verbose)
