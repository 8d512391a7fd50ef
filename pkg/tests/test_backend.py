import json
import math
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from lawlens.backend import BackendClient, BackendConfig, ChatReply
from lawlens.derivation import derive_for_scenario
from lawlens.errors import BackendError, BackendTimeout, ValidationError
from lawlens.retrieval import build_index
from lawlens.taxonomy import TagSet


class _StubHandler(BaseHTTPRequestHandler):
    """Scriptable OpenAI-compatible stub: behavior set per server."""

    def log_message(self, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        server = self.server
        server.requests.append((self.path, body))
        script = server.script
        step = min(len(server.requests) - 1, len(script) - 1)
        action = script[step]
        if action == "sleep":
            time.sleep(1.0)
            action = {"status": 200}
        if isinstance(action, int):
            action = {"status": action}
        status = action.get("status", 200)
        if status != 200:
            self.send_response(status)
            self.end_headers()
            self.wfile.write(b"stub failure")
            return
        if self.path.endswith("/embeddings"):
            payload = {"data": [{"embedding": v}
                                for v in action.get("vectors", [])]}
        else:
            content = action.get("text", "Yes")
            choice = {"message": {"content": content}}
            if "logprobs" in action:
                choice["logprobs"] = {"content": [{
                    "token": content,
                    "top_logprobs": [
                        {"token": tok, "logprob": lp}
                        for tok, lp in action["logprobs"].items()],
                }]}
            payload = {"choices": [choice]}
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    server.script = [{"status": 200}]
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    thread.join(timeout=2)


def _client(server, **overrides):
    cfg = dict(base_url=f"http://127.0.0.1:{server.server_address[1]}",
               timeout_s=2.0, retries=2, backoff_s=0.01)
    cfg.update(overrides)
    return BackendClient(BackendConfig(**cfg))


MESSAGES = [{"role": "system", "content": "s"},
            {"role": "user", "content": "u"}]


def test_chat_echo_yes(stub_server):
    stub_server.script = [{"text": "Yes"}]
    reply = _client(stub_server).chat(MESSAGES)
    assert reply.text == "Yes"


def test_chat_logprobs_passed_through(stub_server):
    stub_server.script = [{"text": "Yes",
                           "logprobs": {"Yes": -0.1, "No": -2.5}}]
    reply = _client(stub_server).chat(MESSAGES)
    assert reply.top_logprobs == {"Yes": -0.1, "No": -2.5}


def test_retry_on_500_then_success(stub_server):
    stub_server.script = [500, 500, {"text": "Yes"}]
    reply = _client(stub_server).chat(MESSAGES)
    assert reply.text == "Yes"
    assert len(stub_server.requests) == 3


def test_retries_exhausted_raises(stub_server):
    stub_server.script = [500]
    with pytest.raises(BackendError):
        _client(stub_server).chat(MESSAGES)
    assert len(stub_server.requests) == 3   # initial + 2 retries


def test_client_error_not_retried(stub_server):
    stub_server.script = [404]
    with pytest.raises(BackendError):
        _client(stub_server).chat(MESSAGES)
    assert len(stub_server.requests) == 1


def test_timeout_raises_timeout_error(stub_server):
    stub_server.script = ["sleep"]
    client = _client(stub_server, timeout_s=0.2, retries=0)
    with pytest.raises(BackendTimeout):
        client.chat(MESSAGES)


def test_connection_refused():
    client = BackendClient(BackendConfig(
        base_url="http://127.0.0.1:9", timeout_s=0.5, retries=0,
        backoff_s=0.01))
    with pytest.raises(BackendError):
        client.chat(MESSAGES)


def test_invalid_role_rejected(stub_server):
    with pytest.raises(ValidationError):
        _client(stub_server).chat([{"role": "narrator", "content": "x"}])


# -- embeddings --------------------------------------------------------


def test_embed_unit_vectors_pass_through(stub_server):
    stub_server.script = [{"vectors": [[1.0, 0.0], [0.0, 1.0]]}]
    vectors = _client(stub_server).embed(["a", "b"])
    assert vectors == [[1.0, 0.0], [0.0, 1.0]]


def test_embed_normalizes(stub_server):
    stub_server.script = [{"vectors": [[3.0, 4.0]]}]
    [v] = _client(stub_server).embed(["a"])
    assert v == pytest.approx([0.6, 0.8])


def test_embed_empty_tokens_precondition(stub_server):
    with pytest.raises(ValidationError):
        _client(stub_server).embed([])


def test_embed_dimension_mismatch(stub_server):
    stub_server.script = [{"vectors": [[1.0, 0.0], [1.0]]}]
    with pytest.raises(BackendError):
        _client(stub_server).embed(["a", "b"])


def test_embed_count_mismatch(stub_server):
    stub_server.script = [{"vectors": [[1.0, 0.0]]}]
    with pytest.raises(BackendError):
        _client(stub_server).embed(["a", "b"])


# -- config ------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValidationError):
        BackendConfig(base_url="http://x", timeout_s=0)
    with pytest.raises(ValidationError):
        BackendConfig(base_url="http://x", max_concurrency=0)


def test_config_from_env(monkeypatch):
    monkeypatch.delenv("LAWLENS_BACKEND_URL", raising=False)
    with pytest.raises(ValidationError):
        BackendConfig.from_env()
    monkeypatch.setenv("LAWLENS_BACKEND_URL", "http://h")
    monkeypatch.setenv("LAWLENS_BACKEND_MODEL", "m1")
    monkeypatch.setenv("LAWLENS_BACKEND_TIMEOUT_S", "7")
    cfg = BackendConfig.from_env()
    assert (cfg.base_url, cfg.model, cfg.timeout_s) == ("http://h", "m1", 7.0)


# -- full remote pipeline ----------------------------------------------


def test_remote_derivation_deterministic(stub_server, taxonomy, corpus):
    reply = json.dumps({"mandatory": ["reduce speed and turn on low-beam "
                                      "headlights in rain"],
                        "prohibitive": []})
    stub_server.script = [{"text": reply}]
    client = _client(stub_server)
    index = build_index(corpus)
    tags = TagSet.of(["/Environment/Weather/Rain"])
    a = derive_for_scenario(index, corpus, taxonomy, tags,
                            engine="remote", backend=client)
    b = derive_for_scenario(index, corpus, taxonomy, tags,
                            engine="remote", backend=client)
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())
    # temperature 0 requested on the wire
    assert all(body["temperature"] == 0.0
               for path, body in stub_server.requests
               if path.endswith("/chat/completions"))
