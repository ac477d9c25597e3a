"""Thin client for the service endpoints.

By default calls are dispatched in process through an ASGI transport, so
the CLI needs no running server and adds no serialization loss beyond
JSON's exact float round-trip. Passing a base URL switches the same
calls to a remote server.
"""

from __future__ import annotations

import asyncio

import httpx

__all__ = ["ClientError", "call_service"]

# Exit codes the CLI maps failures to.
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_OTHER = 1


class ClientError(Exception):
    """Service call failure with the CLI exit code it maps to."""

    def __init__(self, message: str, exit_code: int) -> None:
        super().__init__(message)
        self.exit_code = exit_code


def _in_process(path: str, payload: dict) -> httpx.Response:
    from .service import app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://qhedge.internal",
                                     timeout=None) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _remote(path: str, payload: dict, server: str) -> httpx.Response:
    url = server.rstrip("/") + path
    try:
        return httpx.post(url, json=payload, timeout=None)
    except httpx.HTTPError as exc:
        raise ClientError(f"request to {url} failed: {exc}", EXIT_OTHER)


def _detail(body: dict) -> str:
    detail = body.get("detail", body)
    if isinstance(detail, list):
        # pydantic validation errors: name the offending fields.
        parts = []
        for item in detail:
            loc = ".".join(str(p) for p in item.get("loc", []) if p != "body")
            parts.append(f"{loc}: {item.get('msg', '')}".strip(": "))
        return "; ".join(parts)
    return str(detail)


def call_service(path: str, payload: dict,
                 server: "str | None" = None) -> dict:
    """POST a request model dump and return the parsed response body.

    Raises ClientError with the appropriate CLI exit code on failure:
    validation problems map to the config exit code, reported numerical
    breakdowns to the numerical one.
    """
    if server:
        resp = _remote(path, payload, server)
    else:
        resp = _in_process(path, payload)
    if resp.status_code == 200:
        return resp.json()
    try:
        body = resp.json()
    except ValueError:
        body = {"detail": resp.text}
    message = _detail(body)
    if resp.status_code == 422:
        raise ClientError(f"invalid configuration: {message}", EXIT_CONFIG)
    if resp.status_code == 500 and body.get("error") == "numerical":
        raise ClientError(f"numerical failure: {message}", EXIT_NUMERICAL)
    raise ClientError(
        f"service error (HTTP {resp.status_code}): {message}", EXIT_OTHER)
