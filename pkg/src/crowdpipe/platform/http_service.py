"""HTTP face of the platform.

JSON over HTTP/1.1; errors are ``{"error": code, "detail": text}`` with 4xx
statuses. Also serves the static worker UI under ``/worker`` when a UI
directory is configured.
"""

from __future__ import annotations

import json
import logging
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from ..errors import CrowdPipeError, UsageError
from ..presenter import Presenter
from .local import LocalPlatform

logger = logging.getLogger(__name__)

CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}

_TASKS_RE = re.compile(r"^/api/projects/([^/]+)/tasks$")
_NEWTASK_RE = re.compile(r"^/api/projects/([^/]+)/newtask$")
_RESULTS_RE = re.compile(r"^/api/tasks/([^/]+)/results$")
_ANSWERS_RE = re.compile(r"^/api/tasks/([^/]+)/answers$")


class _Handler(BaseHTTPRequestHandler):
    server: "PlatformServer"

    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        logger.debug("http: " + fmt, *args)

    # -- plumbing ------------------------------------------------------------

    def _send_json(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _send_error(self, exc: CrowdPipeError) -> None:
        status = exc.http_status if exc.http_status >= 400 else 500
        self._send_json(status, {"error": exc.code, "detail": str(exc)})

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            raise UsageError("request body required")
        try:
            body = json.loads(raw.decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            raise UsageError("request body is not valid JSON")
        if not isinstance(body, dict):
            raise UsageError("request body must be a JSON object")
        return body

    def _dispatch(self, fn) -> None:
        try:
            fn()
        except CrowdPipeError as exc:
            self._send_error(exc)
        except Exception:
            logger.exception("unhandled error serving %s", self.path)
            self._send_json(500, {"error": "internal", "detail": "internal error"})

    # -- routes --------------------------------------------------------------

    def do_POST(self):
        self._dispatch(self._post)

    def do_GET(self):
        self._dispatch(self._get)

    def _post(self) -> None:
        platform = self.server.platform
        url = urlparse(self.path)

        if url.path == "/api/projects":
            body = self._read_body()
            if "name" not in body or "presenter" not in body:
                raise UsageError("need 'name' and 'presenter'")
            presenter = Presenter.from_dict(body["presenter"])
            project_id = platform.create_project(body["name"], presenter)
            self._send_json(200, {"project_id": project_id})
            return

        m = _TASKS_RE.match(url.path)
        if m:
            body = self._read_body()
            for key in ("payload", "n_assignments", "fingerprint"):
                if key not in body:
                    raise UsageError(f"need '{key}'")
            task = platform.publish(
                m.group(1), body["payload"], int(body["n_assignments"]), body["fingerprint"]
            )
            self._send_json(200, task.to_dict())
            return

        m = _ANSWERS_RE.match(url.path)
        if m:
            body = self._read_body()
            for key in ("worker_id", "answer"):
                if key not in body:
                    raise UsageError(f"need '{key}'")
            assignment = platform.submit_answer(
                m.group(1), str(body["worker_id"]), body["answer"]
            )
            self._send_json(200, assignment.to_dict())
            return

        self._send_json(
            404, {"error": "not_found", "detail": f"no such endpoint: POST {url.path}"}
        )

    def _get(self) -> None:
        platform = self.server.platform
        url = urlparse(self.path)

        if url.path == "/api/projects":
            self._send_json(200, {"projects": platform.list_projects()})
            return

        m = _RESULTS_RE.match(url.path)
        if m:
            assignments = platform.fetch_results(m.group(1))
            self._send_json(
                200,
                {
                    "task_id": m.group(1),
                    "assignments": [a.to_dict() for a in assignments],
                },
            )
            return

        m = _NEWTASK_RE.match(url.path)
        if m:
            params = parse_qs(url.query)
            worker = params.get("worker_id", [""])[0]
            if not worker:
                raise UsageError("worker_id query parameter required")
            view = platform.next_task(m.group(1), worker)
            self._send_json(200, {"task": view.to_dict() if view else None})
            return

        if url.path == "/worker" or url.path.startswith("/worker/"):
            self._serve_static(url.path)
            return

        self._send_json(
            404, {"error": "not_found", "detail": f"no such endpoint: GET {url.path}"}
        )

    def _serve_static(self, path: str) -> None:
        root = self.server.ui_dir
        if root is None:
            self._send_json(
                404,
                {
                    "error": "no_worker_ui",
                    "detail": "no worker UI configured; start the server with a UI directory",
                },
            )
            return
        rel = path[len("/worker"):].lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if root.resolve() not in target.parents and target != root.resolve():
            self._send_json(404, {"error": "not_found", "detail": "no such file"})
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_json(404, {"error": "not_found", "detail": f"no such file: {rel}"})
            return
        data = target.read_bytes()
        self.send_response(200)
        ctype = CONTENT_TYPES.get(target.suffix.lower(), "application/octet-stream")
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class PlatformServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, platform: LocalPlatform, host: str = "127.0.0.1", port: int = 7878,
                 ui_dir: str | Path | None = None):
        self.platform = platform
        self.ui_dir = Path(ui_dir) if ui_dir else None
        super().__init__((host, port), _Handler)

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"

    def start_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread
