"""Serving a trained bundle over the regrobust-oracle/1 wire protocol.

Line-delimited JSON: the server sends {"protocol": "regrobust-oracle/1"} on
connect, then answers {"id": N, "seq": [...]} requests with
{"id": N, "label": 0|1}. Malformed requests get {"error": ...} and the
connection keeps serving. Inference runs under a lock (one in flight per
process); the model itself is shared read-only.
"""

from __future__ import annotations

import json
import socketserver
import sys
import threading
from fractions import Fraction

import torch

from .models import build_model, pad_batch

PROTOCOL = "regrobust-oracle/1"


class ModelOracle:
    def __init__(self, bundle):
        if isinstance(bundle, (str, bytes)) or hasattr(bundle, "__fspath__"):
            bundle = torch.load(bundle, weights_only=False)
        if bundle.get("format") != "oracle-service-bundle/1":
            raise ValueError("not an oracle-service bundle")
        self.bundle = bundle
        cfg = bundle["config"]
        self.model = build_model(bundle["architecture"], **cfg)
        self.model.load_state_dict(bundle["state_dict"])
        self.model.eval()
        self.stats = bundle["normalization"]
        self.max_len = cfg.get("max_len", 64)
        self._lock = threading.Lock()

    @staticmethod
    def _parse_letter(value) -> float:
        if isinstance(value, str):
            if "/" in value:
                num, den = value.split("/", 1)
                return float(Fraction(int(num), int(den)))
            return float(Fraction(value))
        if isinstance(value, (int, float)):
            return float(value)
        raise ValueError(f"bad letter {value!r}")

    def label(self, seq) -> int:
        letters = [self._parse_letter(x) for x in seq]
        if not letters:
            raise ValueError("empty sequence")
        letters = letters[: self.max_len]
        with self._lock, torch.no_grad():
            x, lengths = pad_batch([letters], self.stats["mean"], self.stats["std"])
            logit = self.model(x, lengths)[0]
            return int(torch.sigmoid(logit).item() >= 0.5)

    def answer(self, line: str) -> str:
        try:
            doc = json.loads(line)
            request_id = doc["id"]
            label = self.label(doc["seq"])
            return json.dumps({"id": request_id, "label": label})
        except Exception as exc:
            return json.dumps({"error": str(exc)})


def serve_stdio(oracle: ModelOracle, stdin=None, stdout=None):
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stdout.write(json.dumps({"protocol": PROTOCOL}) + "\n")
    stdout.flush()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        stdout.write(oracle.answer(line) + "\n")
        stdout.flush()


def serve_tcp(oracle: ModelOracle, host: str, port: int, ready_event=None):
    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            self.wfile.write((json.dumps({"protocol": PROTOCOL}) + "\n").encode())
            for raw in self.rfile:
                line = raw.decode("utf-8", errors="replace").strip()
                if not line:
                    continue
                self.wfile.write((oracle.answer(line) + "\n").encode())

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    server = Server((host, port), Handler)
    if ready_event is not None:
        ready_event.set()
    print(f"serving {PROTOCOL} on {server.server_address[0]}:{server.server_address[1]}",
          file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    finally:
        server.server_close()
    return server
