"""Chat-completions HTTP oracle.

Config files are INI-style with an ``[oracle]`` section::

    [oracle]
    url = https://api.openai.com/v1/chat/completions
    model = gpt-4
    temperature = 0
    max_tokens = 1024
    timeout = 60
    max_retries = 3
    backoff = 1.0

The credential comes from the ``API_KEY`` environment variable unless the
file sets ``api_key``.
"""

from __future__ import annotations

import configparser
import logging
import os
import time
from dataclasses import dataclass, fields, replace
from typing import Callable

import httpx

from .base import OracleQuery, OracleResponse, OracleTransportError, response_from_text

log = logging.getLogger(__name__)

RETRY_STATUS = {429, 500, 502, 503, 504}


class TransportError(OracleTransportError):
    pass


class AuthError(OracleTransportError):
    pass


class RateLimited(OracleTransportError):
    pass


class MalformedApiResponse(OracleTransportError):
    pass


@dataclass(frozen=True)
class EndpointConfig:
    url: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4"
    api_key: str | None = None
    temperature: float = 0.0
    max_tokens: int = 1024
    timeout: float = 60.0
    max_retries: int = 3
    backoff: float = 1.0

    def resolved_key(self) -> str | None:
        return self.api_key or os.environ.get("API_KEY")


def load_endpoint_config(path: str | os.PathLike | None = None, **overrides) -> EndpointConfig:
    cfg = EndpointConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise FileNotFoundError(path)
        section = parser["oracle"] if parser.has_section("oracle") else {}
        types = {f.name: f.type for f in fields(EndpointConfig)}
        values = {}
        for key, raw in section.items():
            if key not in types:
                raise ValueError(f"unknown oracle config key {key!r}")
            t = types[key]
            values[key] = float(raw) if "float" in t else int(raw) if t == "int" else raw
        cfg = replace(cfg, **values)
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def request_body(query: OracleQuery, config: EndpointConfig) -> dict:
    return {
        "model": config.model,
        "messages": query.wire_messages(),
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    }


def completion_text(payload: dict) -> str:
    try:
        choice = payload["choices"][0]
    except (KeyError, IndexError, TypeError) as e:
        raise MalformedApiResponse(f"no choices in response: {str(payload)[:200]}") from e
    if isinstance(choice.get("message"), dict) and isinstance(choice["message"].get("content"), str):
        return choice["message"]["content"]
    if isinstance(choice.get("text"), str):
        return choice["text"]
    raise MalformedApiResponse(f"first choice has no text: {str(choice)[:200]}")


def http_oracle_query(
    query: OracleQuery,
    config: EndpointConfig,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> OracleResponse:
    """POST the conversation and parse the first choice as a plan.

    Transport failures, 429 and 5xx answers are retried with exponential
    backoff, ``max_retries`` times.
    """
    headers = {"Content-Type": "application/json"}
    key = config.resolved_key()
    if key:
        headers["Authorization"] = f"Bearer {key}"
    body = request_body(query, config)
    own = client is None
    client = client or httpx.Client(timeout=config.timeout)
    try:
        last: Exception | None = None
        for attempt in range(config.max_retries + 1):
            if attempt:
                delay = config.backoff * 2 ** (attempt - 1)
                log.info("retrying in %.1fs after %s", delay, last)
                sleep(delay)
            try:
                resp = client.post(config.url, json=body, headers=headers)
            except httpx.HTTPError as e:
                last = TransportError(f"{type(e).__name__}: {e}")
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            if resp.status_code == 429:
                last = RateLimited(f"HTTP 429 after {attempt + 1} attempt(s)")
                continue
            if resp.status_code in RETRY_STATUS:
                last = TransportError(f"HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                payload = resp.json()
            except ValueError as e:
                raise MalformedApiResponse(f"response is not JSON: {resp.text[:200]}") from e
            return response_from_text(completion_text(payload), query.objects)
        raise last
    finally:
        if own:
            client.close()


class HttpOracle:
    def __init__(self, config: EndpointConfig, client: httpx.Client | None = None, sleep=time.sleep):
        self.config = config
        self.client = client
        self.sleep = sleep

    def query(self, query: OracleQuery) -> OracleResponse:
        return http_oracle_query(query, self.config, self.client, self.sleep)
