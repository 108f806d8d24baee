"""Shared HTTP plumbing for the remote embedding and completion clients."""

from __future__ import annotations

import os

import requests

from .errors import RemoteServiceError

# Bearer token for remote services; read from the environment on every call
# and never persisted to any output file.
API_TOKEN_ENV = "KGPROMPT_API_TOKEN"


def post_json(url: str, payload: dict, timeout: float) -> dict:
    """POST a JSON payload and return the parsed JSON response.

    Raises RemoteServiceError on transport failures (status None), non-2xx
    responses, or bodies that are not JSON objects.
    """
    headers = {}
    token = os.environ.get(API_TOKEN_ENV)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    try:
        response = requests.post(url, json=payload, timeout=timeout, headers=headers)
    except requests.RequestException as exc:
        raise RemoteServiceError(f"request to {url} failed: {exc}", status=None) from exc
    if not 200 <= response.status_code < 300:
        raise RemoteServiceError(
            f"{url} returned HTTP {response.status_code}", status=response.status_code
        )
    try:
        body = response.json()
    except ValueError as exc:
        raise RemoteServiceError(
            f"{url} returned a non-JSON body", status=response.status_code
        ) from exc
    if not isinstance(body, dict):
        raise RemoteServiceError(
            f"{url} returned JSON of type {type(body).__name__}, expected object",
            status=response.status_code,
        )
    return body
