"""Read-only HTTP surface for the visual builder.

GET /catalog returns the module catalog; POST /check validates a config
body and returns the findings. Both endpoints are pure, so concurrent
requests are safe.
"""

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .config import check_config, default_registry, describe_registry, parse_config
from .errors import ConfigError


def _check_payload(text):
    registry = default_registry()
    try:
        doc = parse_config(text)
    except ConfigError as e:
        return {"ok": False, "findings": [{"path": getattr(e, "path", None) or "", "message": str(e)}]}
    return check_config(doc, registry).to_dict()


class _Handler(BaseHTTPRequestHandler):
    catalog = None

    def _reply(self, status, payload):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self):
        if self.path.rstrip("/") == "/catalog" or self.path == "/catalog":
            self._reply(200, self.catalog)
        else:
            self._reply(404, {"error": f"no such endpoint {self.path!r}"})

    def do_POST(self):
        if self.path.rstrip("/") != "/check":
            self._reply(404, {"error": f"no such endpoint {self.path!r}"})
            return
        length = int(self.headers.get("Content-Length", 0))
        text = self.rfile.read(length).decode("utf-8")
        self._reply(200, _check_payload(text))

    def log_message(self, fmt, *args):
        pass  # keep test output quiet


def make_server(port=8765):
    handler = type("CatalogHandler", (_Handler,), {"catalog": describe_registry(default_registry())})
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def serve_catalog(port=8765):
    server = make_server(port)
    print(f"serving catalog on http://127.0.0.1:{port} (GET /catalog, POST /check)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
