"""Object recognition behind a plain web endpoint, plus a deterministic stub.

The engine only needs an endpoint URL: request {scene_ref}, response
{label, confidence}. A recognizer miss is a confidence-0 result, not an
error, so "unsure" and "down" stay distinguishable. The stub serves a fixed
scene table and optionally sleeps a seeded sampled latency.
"""

# No postponed annotations here: the stub app defines its pydantic models
# inside the factory, and FastAPI must see real classes, not strings.

import random
import time
from dataclasses import dataclass
from typing import Optional

import httpx

from .anchors import RecognitionResult
from .sampling import TruncatedNormal


class VisionError(Exception):
    pass


class Timeout(VisionError):
    def __init__(self, elapsed: float):
        super().__init__(f"recognition endpoint timed out after {elapsed:.3f} s")
        self.elapsed = elapsed


class EndpointError(VisionError):
    def __init__(self, status: int, body: str):
        super().__init__(f"recognition endpoint returned {status}: {body[:120]}")
        self.status = status
        self.body = body


class MalformedResponse(VisionError):
    pass


class PortUnavailable(VisionError):
    pass


@dataclass(frozen=True)
class RecognitionRequest:
    scene_ref: str

    def __post_init__(self):
        if not self.scene_ref:
            raise ValueError("scene_ref must be non-empty")


@dataclass(frozen=True)
class EndpointConfig:
    endpoint_url: str
    timeout: float = 10.0
    retries: int = 1

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


def recognize(
    request: RecognitionRequest,
    config: EndpointConfig,
    *,
    client: Optional[httpx.Client] = None,
) -> RecognitionResult:
    """One recognition round trip with up to config.retries retries on
    timeouts and bad statuses. Malformed bodies are not retried: the
    endpoint is deterministic, a second try returns the same garbage."""
    last_error: VisionError = EndpointError(0, "no attempt made")
    for _ in range(config.retries + 1):
        started = time.monotonic()
        try:
            if client is not None:
                response = client.post(
                    config.endpoint_url,
                    json={"scene_ref": request.scene_ref},
                    timeout=config.timeout,
                )
            else:
                with httpx.Client(timeout=config.timeout) as own:
                    response = own.post(
                        config.endpoint_url, json={"scene_ref": request.scene_ref}
                    )
        except httpx.TimeoutException:
            last_error = Timeout(time.monotonic() - started)
            continue
        except httpx.HTTPError as exc:
            last_error = EndpointError(0, str(exc))
            continue
        if response.status_code != 200:
            last_error = EndpointError(response.status_code, response.text)
            continue
        try:
            doc = response.json()
            return RecognitionResult(
                label=str(doc["label"]), confidence=float(doc["confidence"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponse(f"unusable recognition body: {exc}") from exc
    raise last_error


MISS = RecognitionResult(label="", confidence=0.0)


@dataclass
class StubVision:
    """In-process recognizer over a fixed scene table. Counts calls so
    tests can assert which paths actually hit vision."""

    fixtures: dict[str, RecognitionResult]
    calls: int = 0

    def recognize(self, scene_ref: str) -> RecognitionResult:
        self.calls += 1
        return self.fixtures.get(scene_ref, MISS)


@dataclass
class HttpVision:
    """Recognizer client over the wire protocol; same shape as StubVision."""

    config: EndpointConfig
    client: Optional[httpx.Client] = None
    calls: int = 0

    def recognize(self, scene_ref: str) -> RecognitionResult:
        self.calls += 1
        return recognize(RecognitionRequest(scene_ref), self.config, client=self.client)


def make_stub_app(
    fixtures: dict[str, RecognitionResult],
    latency_model: Optional[TruncatedNormal] = None,
    seed: int = 0,
):
    """FastAPI app implementing the stub wire protocol. With a latency
    model it sleeps a seeded sample per request, so two runs with the same
    seed see identical delays."""
    from fastapi import FastAPI
    from pydantic import BaseModel

    if not fixtures:
        raise ValueError("stub needs at least one scene fixture")

    class RecognizeIn(BaseModel):
        scene_ref: str

    class RecognizeOut(BaseModel):
        label: str
        confidence: float

    app = FastAPI(title="recognition stub")
    rng = random.Random(seed)
    app.state.calls = 0

    @app.post("/recognize")
    def recognize_route(body: RecognizeIn) -> RecognizeOut:
        app.state.calls += 1
        if latency_model is not None:
            time.sleep(latency_model.sample(rng))
        result = fixtures.get(body.scene_ref, MISS)
        return RecognizeOut(label=result.label, confidence=result.confidence)

    return app


def stub_serve(
    fixtures: dict[str, RecognitionResult],
    latency_model: Optional[TruncatedNormal] = None,
    seed: int = 0,
    host: str = "127.0.0.1",
    port: int = 8601,
) -> None:
    """Blocking uvicorn run of the stub endpoint."""
    import uvicorn

    app = make_stub_app(fixtures, latency_model, seed)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise PortUnavailable(f"cannot bind {host}:{port}: {exc}") from exc


def load_fixtures(path) -> dict[str, RecognitionResult]:
    """Scene table file: {"scenes": {scene_ref: {"label","confidence"}}}."""
    import json

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return {
        ref: RecognitionResult(str(raw["label"]), float(raw["confidence"]))
        for ref, raw in doc["scenes"].items()
    }
