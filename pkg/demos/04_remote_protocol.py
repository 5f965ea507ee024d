"""Serve the wire protocol over real HTTP and drive it with RemoteBackend.

Any server that passes `run_conformance` can back the whole engine; here
the mock backend plays the server role via `wire.dispatch`.
"""
import http.server
import json
import threading

import requests

from text2seg import wire
from text2seg.backends import RemoteBackend
from text2seg.conformance import reference_scene, run_conformance
from text2seg.mock import MockBackend

backend = MockBackend(reference_scene())


class Handler(http.server.BaseHTTPRequestHandler):
    def do_POST(self):
        payload = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        try:
            status, body = 200, wire.dispatch(backend, self.path, payload)
        except wire.WireError as exc:
            status = 400 if exc.code == "bad_request" else 500
            body = {"error": {"code": exc.code, "message": exc.message}}
        data = json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


httpd = http.server.ThreadingHTTPServer(("127.0.0.1", 0), Handler)
threading.Thread(target=httpd.serve_forever, daemon=True).start()
url = f"http://127.0.0.1:{httpd.server_port}"
print("serving wire protocol at", url)

remote = RemoteBackend(url)
image = backend.scene.render()
boxes = remote.detect_boxes(image, ["building", "car"], 0.35, 0.25)
print("remote detect:", [(b.phrase, b.score) for b in boxes])
print("remote auto gallery:", len(remote.segment_auto(image, 8)), "candidates")

# the conformance battery works against any live endpoint
problems = run_conformance(
    lambda path, payload: (
        lambda r: (r.status_code, r.json())
    )(requests.post(url + path, json=payload, timeout=30))
)
print("conformance problems:", problems or "none")
httpd.shutdown()
