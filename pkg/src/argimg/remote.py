"""Minimal JSON-over-HTTP plumbing shared by the inference clients."""
from __future__ import annotations

import os
from typing import Any

import requests

INFER_URL_ENV = "ARGIMG_INFER_URL"
DEFAULT_TIMEOUT = 60.0


class TransportError(RuntimeError):
    """Network failure or a malformed service response."""


def infer_url_from_env() -> str | None:
    url = os.environ.get(INFER_URL_ENV, "").strip()
    return url or None


def post_json(url: str, payload: dict, timeout: float = DEFAULT_TIMEOUT) -> Any:
    try:
        response = requests.post(url, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(f"POST {url} failed: {exc}") from exc
    if response.status_code != 200:
        raise TransportError(
            f"POST {url} returned {response.status_code}: {response.text[:200]}"
        )
    try:
        return response.json()
    except ValueError as exc:
        raise TransportError(f"POST {url}: response is not JSON") from exc
