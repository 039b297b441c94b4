from __future__ import annotations

import base64
import http.server
import json
import threading

import numpy as np
import pytest

from argimg.imagegen import stub_raster
from argimg.minicorpus import MiniCorpus, build_minicorpus
from argimg.vision.image import GrayImage, encode_png


@pytest.fixture(scope="session")
def stub_image() -> GrayImage:
    return stub_raster(777, 256, 256)


class _InferenceHandler(http.server.BaseHTTPRequestHandler):
    """Loopback stand-in for the inference service wire protocol."""

    seen: list[dict] = []

    def do_POST(self):  # noqa: N802 (BaseHTTPRequestHandler API)
        length = int(self.headers.get("Content-Length", 0))
        try:
            payload = json.loads(self.rfile.read(length))
        except json.JSONDecodeError:
            self._reply(400, {"error": "malformed JSON"})
            return
        type(self).seen.append(payload)
        if self.path == "/classify":
            n = len(payload["labels"])
            raw = [float(i + 1) for i in range(n)]
            total = sum(raw)
            self._reply(200, {"scores": [v / total for v in raw]})
        elif self.path == "/generate":
            img = stub_raster(
                int(payload["seed"]), int(payload["width"]), int(payload["height"])
            )
            self._reply(
                200,
                {"png_base64": base64.b64encode(encode_png(img)).decode("ascii")},
            )
        else:
            self._reply(404, {"error": "unknown endpoint"})

    def _reply(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):  # silence request logging
        pass


@pytest.fixture(scope="session")
def inference_server():
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), _InferenceHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", _InferenceHandler.seen
    server.shutdown()


@pytest.fixture()
def classify_server(inference_server):
    return inference_server


@pytest.fixture(scope="session")
def minicorpus(tmp_path_factory) -> MiniCorpus:
    return build_minicorpus(tmp_path_factory.mktemp("minicorpus"))


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20230918)
