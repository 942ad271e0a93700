"""HTTP client for a remote masked-span predictor.

Wire format (JSON over POST ``/v1/infill``)::

    request:  {variant, masked_input, prompt, n, top_p, temperature, seed}
    response: {samples: [{tokens, token_logprobs, terminated}]}

``masked_input`` is the window's token list with the span marker rendered as
``<extra_id_0>``.
"""
from __future__ import annotations

import json
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass

from .model import SpanSample
from .templates import SPAN

ENDPOINT = "/v1/infill"
WIRE_SPAN = "<extra_id_0>"
DEFAULT_MAX_IN_FLIGHT = 4


class TransportError(Exception):
    def __init__(self, message: str, attempts: int, status: int | None = None, retryable: bool = True):
        super().__init__(message)
        self.attempts = attempts
        self.status = status
        self.retryable = retryable


def encode_request(variant: str, inp, prompt, n: int, top_p: float, temperature: float, seed: int) -> dict:
    tokens = list(inp.context_before) + [WIRE_SPAN if t == SPAN else t for t in inp.masked_line] + list(inp.context_after)
    return {
        "variant": variant,
        "masked_input": tokens,
        "prompt": prompt.text if prompt is not None else None,
        "n": n,
        "top_p": top_p,
        "temperature": temperature,
        "seed": seed,
    }


def decode_response(body: dict, n: int) -> list[SpanSample]:
    try:
        raw = body["samples"]
        out = [SpanSample(tuple(s["tokens"]), tuple(float(x) for x in s["token_logprobs"]), bool(s["terminated"])) for s in raw]
    except (KeyError, TypeError, ValueError) as exc:
        raise TransportError(f"malformed infill response: {exc}", attempts=1, retryable=False) from exc
    if len(out) != n:
        raise TransportError(f"expected {n} samples, got {len(out)}", attempts=1, retryable=False)
    for s in out:
        if any(lp > 0 for lp in s.token_logprobs):
            raise TransportError("positive log-probability in response", attempts=1, retryable=False)
    return out


@dataclass
class RemoteClient:
    url: str
    timeout: float = 60.0
    retries: int = 2
    backoff: float = 0.5
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT

    def __post_init__(self):
        self._slots = threading.BoundedSemaphore(self.max_in_flight)

    def _post(self, payload: dict) -> dict:
        data = json.dumps(payload).encode()
        req = urllib.request.Request(
            self.url.rstrip("/") + ENDPOINT, data=data, headers={"Content-Type": "application/json"}
        )
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            return json.loads(resp.read().decode())

    def infill(self, handle, inp, prompt, n: int, seed: int) -> list[SpanSample]:
        payload = encode_request(handle.variant, inp, prompt, n, handle.top_p, handle.temperature, seed)
        last: Exception | None = None
        status = None
        for attempt in range(1, self.retries + 2):
            try:
                with self._slots:
                    body = self._post(payload)
                return decode_response(body, n)
            except TransportError as exc:
                exc.attempts = attempt
                raise
            except urllib.error.HTTPError as exc:
                last, status = exc, exc.code
                if exc.code < 500:
                    raise TransportError(f"remote rejected request: HTTP {exc.code}", attempt, exc.code, False) from exc
            except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
                last = exc
            if attempt <= self.retries:
                time.sleep(self.backoff * attempt)
        raise TransportError(f"remote predictor unavailable: {last}", self.retries + 1, status) from last
