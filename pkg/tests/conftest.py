from __future__ import annotations

import json
import math
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

STUB_VOCAB = "羽毛球拍甲乙丙丁abc"


class StubHandler(BaseHTTPRequestHandler):
    """Tiny log-prob server: one token per character, uniform next-token scores.

    Id 0 is end of sequence; characters are numbered from 1.  ``server.fault``
    switches on broken responses for error-path tests.
    """

    def log_message(self, *args):
        pass

    def _send(self, status, body: bytes):
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        srv = self.server
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length).decode("utf-8"))
        with srv.lock:
            srv.requests.append((self.path, payload))
        if srv.fault == "500":
            return self._send(500, b"{}")
        if srv.fault == "badjson":
            return self._send(200, b"{not json")
        if self.path == "/v1/tokenize":
            text = payload["text"]
            ids = []
            with srv.lock:
                for ch in text:
                    if ch not in srv.vocab:
                        srv.vocab[ch] = len(srv.vocab) + 1
                    ids.append(srv.vocab[ch])
            body = {"ids": ids, "pieces": list(text)}
        elif self.path == "/v1/logprobs":
            v = srv.vocab_size
            k = min(payload["top_k"], v)
            lp = -math.log(v)
            body = {"tokens": list(range(k)), "logprobs": [lp] * k, "entropy": math.log(v)}
            if srv.fault == "nan":
                body["logprobs"][0] = float("nan")
            return self._send(200, json.dumps(body, allow_nan=True).encode("utf-8"))
        else:
            return self._send(404, b"{}")
        self._send(200, json.dumps(body, ensure_ascii=False).encode("utf-8"))


@pytest.fixture
def stub_server():
    srv = ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
    srv.lock = threading.Lock()
    srv.requests = []
    srv.fault = None
    srv.vocab = {ch: i + 1 for i, ch in enumerate(STUB_VOCAB)}
    srv.vocab_size = len(STUB_VOCAB) + 1
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    srv.url = f"http://127.0.0.1:{srv.server_address[1]}"
    yield srv
    srv.shutdown()
    srv.server_close()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
