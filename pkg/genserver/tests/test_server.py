import threading

import pytest
from fastapi.testclient import TestClient

from genserver.app import create_app
from genserver.model import ModelRuntime
from genserver.tiny import make_tiny_model


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    return make_tiny_model(tmp_path_factory.mktemp("tiny") / "model")


@pytest.fixture(scope="session")
def ready_runtime(tiny_model_dir):
    runtime = ModelRuntime(str(tiny_model_dir), queue_depth=4)
    runtime.load()
    return runtime


@pytest.fixture()
def client(ready_runtime):
    return TestClient(create_app(ready_runtime))


def _payload(**overrides):
    body = {
        "seed": "oil industry history",
        "n": 2,
        "length": 12,
        "temperature": 0.8,
        "top_p": 0.95,
        "top_k": 40,
        "rng_seed": 7,
    }
    body.update(overrides)
    return body


# --- health transitions -------------------------------------------------------


def test_health_loading_then_ready(tiny_model_dir):
    runtime = ModelRuntime(str(tiny_model_dir))
    app = TestClient(create_app(runtime))
    before = app.get("/health").json()
    assert before == {"status": "loading", "model_tag": str(tiny_model_dir)}
    assert app.post("/generate", json=_payload()).status_code == 503
    runtime.load()
    after = app.get("/health").json()
    assert after["status"] == "ready"
    assert after["model_tag"] == str(tiny_model_dir)


def test_failed_load_reported(tmp_path):
    runtime = ModelRuntime(str(tmp_path / "nope"))
    thread = runtime.load_in_background()
    thread.join()
    app = TestClient(create_app(runtime))
    assert app.get("/health").json()["status"] == "failed"
    resp = app.post("/generate", json=_payload())
    assert resp.status_code == 503


# --- request validation ---------------------------------------------------------


@pytest.mark.parametrize(
    "mutation",
    [
        {"n": 0},
        {"n": -2},
        {"temperature": 0},
        {"top_p": 1.5},
        {"top_k": -1},
        {"length": 0},
        {"seed": None},
        {"unexpected": "field"},
    ],
)
def test_schema_violations_return_400(client, mutation):
    body = _payload()
    body.update(mutation)
    body = {k: v for k, v in body.items() if v is not None}
    if "seed" in mutation:
        body.pop("seed", None)
    resp = client.post("/generate", json=body)
    assert resp.status_code == 400
    assert "detail" in resp.json()


def test_malformed_body_returns_400(client):
    resp = client.post(
        "/generate", content=b"not json", headers={"Content-Type": "application/json"}
    )
    assert resp.status_code == 400


# --- response contract -----------------------------------------------------------


@pytest.mark.parametrize("n", [1, 3, 10])
def test_text_count_matches_n(client, n):
    resp = client.post("/generate", json=_payload(n=n))
    assert resp.status_code == 200
    body = resp.json()
    assert set(body) == {"texts", "model_tag", "elapsed_ms"}
    assert len(body["texts"]) == n
    assert all(isinstance(t, str) and t for t in body["texts"])
    assert isinstance(body["elapsed_ms"], int)


def test_texts_start_with_seed_and_respect_length(client, ready_runtime):
    length = 9
    resp = client.post("/generate", json=_payload(n=4, length=length))
    tokenizer = ready_runtime.tokenizer
    prompt_len = len(tokenizer("oil industry history")["input_ids"])
    for text in resp.json()["texts"]:
        assert text.startswith("oil industry history")
        assert len(tokenizer(text)["input_ids"]) <= prompt_len + length


def test_seeded_requests_are_identical(client):
    first = client.post("/generate", json=_payload(n=3, length=16)).json()["texts"]
    second = client.post("/generate", json=_payload(n=3, length=16)).json()["texts"]
    assert first == second


def test_different_seeds_differ(client):
    a = client.post("/generate", json=_payload(n=3, length=16, rng_seed=1)).json()["texts"]
    b = client.post("/generate", json=_payload(n=3, length=16, rng_seed=2)).json()["texts"]
    assert a != b


def test_unseeded_request_accepted(client):
    body = _payload(n=1)
    body.pop("rng_seed")
    assert client.post("/generate", json=body).status_code == 200


# --- failure paths ---------------------------------------------------------------


def test_queue_full_returns_429(tiny_model_dir, ready_runtime):
    client = TestClient(create_app(ready_runtime))
    acquired = 0
    try:
        while ready_runtime._slots.acquire(blocking=False):
            acquired += 1
        resp = client.post("/generate", json=_payload(n=1))
        assert resp.status_code == 429
    finally:
        for _ in range(acquired):
            ready_runtime._slots.release()
    assert client.post("/generate", json=_payload(n=1)).status_code == 200


def test_inference_failure_returns_500(tiny_model_dir, monkeypatch):
    runtime = ModelRuntime(str(tiny_model_dir))
    runtime.load()

    def boom(*args, **kwargs):
        raise RuntimeError("cuda exploded")

    monkeypatch.setattr(runtime, "_generate_locked", boom)
    client = TestClient(create_app(runtime))
    resp = client.post("/generate", json=_payload(n=1))
    assert resp.status_code == 500
    assert "inference failed" in resp.json()["detail"]


def test_concurrent_requests_all_served(client):
    results = []

    def call():
        results.append(client.post("/generate", json=_payload(n=1, length=6)).status_code)

    threads = [threading.Thread(target=call) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == [200, 200, 200, 200]
