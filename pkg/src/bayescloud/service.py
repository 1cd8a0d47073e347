"""HTTP face of the registry: CRUD, search, remote inference, remote merge,
and static workbench assets under ``/ui``.

JSON over HTTP/1.1, UTF-8.  Error bodies are
``{"code": <machine token>, "message": <text>, "details": {...}}``.
Inference and merge calls are stateless; reads are lock-free; mutations are
serialized inside :class:`Registry`.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import core, integration
from .bnscript import parse_evidence
from .errors import (
    BayesCloudError,
    CycleInUnion,
    InvalidScript,
    NonLeafContinuousEvidence,
    NotFound,
    ScriptError,
    UnknownState,
    UnknownVariable,
    ZeroProbabilityEvidence,
)
from .inference import Marginals, gibbs_query, marginals_to_json, posterior
from .registry import Registry

GIBBS_DEFAULTS = {"samples": 50000, "burn_in": 5000, "seed": 0}


# --------------------------------------------------------------------------
# Service operations (HTTP-independent, reused by tests and the CLI)


def remote_infer(registry: Registry, record_id: str, evidence_text: str, query) -> Marginals:
    """Posterior on a stored model: exact when the model allows it, seeded
    Gibbs with fixed defaults otherwise."""
    record = registry.get(record_id)
    net = core.compile_script(record.script)
    evidence = parse_evidence(evidence_text or "")
    query = list(query)
    try:
        return posterior(net, evidence, query)
    except NonLeafContinuousEvidence:
        return gibbs_query(
            net,
            evidence,
            query,
            n=GIBBS_DEFAULTS["samples"],
            burn_in=GIBBS_DEFAULTS["burn_in"],
            seed=GIBBS_DEFAULTS["seed"],
        )


def remote_merge(
    registry: Registry, id1: str, id2: str, method: str, options: dict | None = None
) -> tuple[str, integration.MergeReport]:
    """Merge two stored models and register the result as a new record."""
    rec1 = registry.get(id1)
    rec2 = registry.get(id2)
    options = dict(options or {})
    request = integration.MergeRequest(
        bn1=core.compile_script(rec1.script),
        bn2=core.compile_script(rec2.script),
        method=method,
        tolerance=float(options.get("tolerance", 1e-6)),
        max_iterations=int(options.get("max_iterations", 10000)),
        sample_count=int(options.get("sample_count", 50000)),
        seed=int(options.get("seed", 0)),
        max_states=int(options.get("max_states", 2**22)),
    )
    merged, report = integration.merge(request)
    keywords = sorted(set(rec1.keywords) | set(rec2.keywords) | {"merged"})
    new_id = registry.register(
        title=f"Merged: {rec1.title} + {rec2.title}",
        script=core.network_to_script(merged),
        description=f"Model integration ({report.method}) of '{rec1.title}' and '{rec2.title}'.",
        author="bayescloud",
        keywords=keywords,
    )
    return new_id, report


# --------------------------------------------------------------------------
# HTTP plumbing


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details: dict | None = None):
        self.status = status
        self.code = code
        self.message = message
        self.details = details or {}
        super().__init__(message)


def _error_response(exc: Exception) -> ApiError:
    details: dict = {}
    if isinstance(exc, ApiError):
        return exc
    if isinstance(exc, NotFound):
        return ApiError(404, exc.code, str(exc), {"id": exc.record_id})
    if isinstance(exc, ZeroProbabilityEvidence):
        return ApiError(422, exc.code, str(exc))
    if isinstance(exc, CycleInUnion):
        return ApiError(409, exc.code, str(exc), {"cycle": exc.cycle})
    if isinstance(exc, UnknownVariable):
        details = {"variable": exc.name}
    elif isinstance(exc, UnknownState):
        details = {"variable": exc.variable, "value": str(exc.value)}
    elif isinstance(exc, ScriptError):
        details = {"line": exc.line, "column": exc.column}
    elif isinstance(exc, InvalidScript) and exc.line is not None:
        details = {"line": exc.line, "column": exc.column}
    if isinstance(exc, BayesCloudError):
        return ApiError(400, exc.code, str(exc), details)
    if isinstance(exc, (ValueError, KeyError, TypeError)):
        return ApiError(400, "bad_request", str(exc))
    return ApiError(500, "internal_error", str(exc))


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "bayescloud"

    # the server instance carries .registry and .ui_dir

    def log_message(self, fmt, *args):  # quiet by default
        if getattr(self.server, "verbose", False):
            super().log_message(fmt, *args)

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_empty(self, status: int) -> None:
        self.send_response(status)
        self.send_header("Content-Length", "0")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()

    def _send_error_json(self, exc: Exception) -> None:
        api = _error_response(exc)
        self._send_json(
            api.status, {"code": api.code, "message": api.message, "details": api.details}
        )

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            data = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ApiError(400, "bad_json", f"request body is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise ApiError(400, "bad_json", "request body must be a JSON object")
        return data

    @property
    def registry(self) -> Registry:
        return self.server.registry

    # -- routing

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        try:
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            if url.path == "/" or (parts and parts[0] == "ui"):
                self._serve_ui(parts[1:] if parts else [])
                return
            if parts == ["models"]:
                query = parse_qs(url.query).get("q", [""])[0]
                records = self.registry.search(query)
                self._send_json(200, [r.summary() for r in records])
                return
            if len(parts) == 2 and parts[0] == "models":
                record = self.registry.get(parts[1])
                self._send_json(200, record.to_json())
                return
            raise ApiError(404, "not_found", f"no route for GET {url.path}")
        except Exception as exc:  # noqa: BLE001 - edge handler
            self._send_error_json(exc)

    def do_POST(self):
        try:
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            if parts == ["models"]:
                body = self._read_json()
                record_id = self.registry.register(
                    title=body.get("title", ""),
                    script=body.get("script", ""),
                    description=body.get("description", ""),
                    author=body.get("author", ""),
                    keywords=body.get("keywords", ()),
                )
                self._send_json(201, {"id": record_id})
                return
            if len(parts) == 3 and parts[0] == "models" and parts[2] == "infer":
                body = self._read_json()
                query = body.get("query") or []
                if not isinstance(query, list) or not query:
                    raise ApiError(400, "bad_request", "'query' must be a non-empty list of names")
                marginals = remote_infer(
                    self.registry, parts[1], body.get("evidence", ""), query
                )
                self._send_json(200, marginals_to_json(marginals))
                return
            if parts == ["merge"]:
                body = self._read_json()
                for field in ("id1", "id2"):
                    if field not in body:
                        raise ApiError(400, "bad_request", f"'{field}' is required")
                new_id, report = remote_merge(
                    self.registry,
                    body["id1"],
                    body["id2"],
                    body.get("method", "optimize"),
                    body.get("options"),
                )
                self._send_json(201, {"id": new_id, "report": report.to_json()})
                return
            raise ApiError(404, "not_found", f"no route for POST {url.path}")
        except Exception as exc:  # noqa: BLE001 - edge handler
            self._send_error_json(exc)

    def do_PUT(self):
        try:
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            if len(parts) == 2 and parts[0] == "models":
                body = self._read_json()
                fields = {
                    k: v
                    for k, v in body.items()
                    if k in ("title", "description", "author", "keywords", "script")
                }
                record = self.registry.update(parts[1], **fields)
                self._send_json(200, record.to_json())
                return
            raise ApiError(404, "not_found", f"no route for PUT {url.path}")
        except Exception as exc:  # noqa: BLE001 - edge handler
            self._send_error_json(exc)

    def do_DELETE(self):
        try:
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            if len(parts) == 2 and parts[0] == "models":
                self.registry.delete(parts[1])
                self._send_empty(204)
                return
            raise ApiError(404, "not_found", f"no route for DELETE {url.path}")
        except Exception as exc:  # noqa: BLE001 - edge handler
            self._send_error_json(exc)

    # -- static workbench assets

    def _serve_ui(self, rel_parts: list[str]) -> None:
        ui_dir = getattr(self.server, "ui_dir", None)
        if ui_dir is None:
            raise ApiError(404, "not_found", "no workbench assets configured (serve --ui-dir)")
        base = Path(ui_dir).resolve()
        rel = "/".join(rel_parts) or "index.html"
        target = (base / rel).resolve()
        if not str(target).startswith(str(base)) or not target.is_file():
            if (base / "index.html").is_file() and not rel_parts:
                target = base / "index.html"
            else:
                raise ApiError(404, "not_found", f"no asset {rel!r}")
        content = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(content)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(content)


class ApiServer:
    """Threaded HTTP server bound to a registry data directory."""

    def __init__(self, port: int, data_dir, ui_dir=None, verbose: bool = False):
        self.httpd = ThreadingHTTPServer(("0.0.0.0", port), _Handler)
        self.httpd.registry = Registry(data_dir)
        self.httpd.ui_dir = str(ui_dir) if ui_dir else None
        self.httpd.verbose = verbose
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def registry(self) -> Registry:
        return self.httpd.registry

    def serve_forever(self):
        self.httpd.serve_forever()

    def start_background(self) -> "ApiServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def shutdown(self):
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
