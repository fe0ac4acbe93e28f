"""Client for the service API: in-process by default, HTTP when given a URL."""

from __future__ import annotations

import httpx

from .errors import TrifactorError
from . import service


class ServiceError(TrifactorError):
    """The server rejected a request or could not be reached."""


class ServiceClient:
    """Dispatches requests either to the local handlers or to a server.

    With ``base_url=None`` every call runs in-process through the same
    pydantic models the HTTP API uses, so results are identical either way.
    """

    def __init__(self, base_url: str | None = None, timeout: float | None = None):
        self._base_url = base_url.rstrip("/") if base_url else None
        self._timeout = timeout

    def decompose(self, req: service.DecomposeRequest) -> service.DecomposeResponse:
        if self._base_url is None:
            return service.handle_decompose(req)
        return self._post("/v1/decompose", req, service.DecomposeResponse)

    def select(self, req: service.SelectRequest) -> service.SelectResponse:
        if self._base_url is None:
            return service.handle_select(req)
        return self._post("/v1/select", req, service.SelectResponse)

    def simulate(self, req: service.SimulateRequest) -> service.SimulateResponse:
        if self._base_url is None:
            return service.handle_simulate(req)
        return self._post("/v1/simulate", req, service.SimulateResponse)

    def _post(self, path: str, req, response_model):
        url = f"{self._base_url}{path}"
        try:
            resp = httpx.post(url, json=req.model_dump(mode="json"), timeout=self._timeout)
        except httpx.HTTPError as exc:
            raise ServiceError(f"request to {url} failed: {exc}") from exc
        if resp.status_code != 200:
            raise ServiceError(_describe_failure(url, resp))
        return response_model.model_validate(resp.json())


def _describe_failure(url: str, resp: httpx.Response) -> str:
    try:
        body = resp.json()
    except ValueError:
        return f"{url} returned HTTP {resp.status_code}"
    if isinstance(body, dict) and "error" in body:
        return f"{body['error']}: {body.get('detail', '')}"
    return f"{url} returned HTTP {resp.status_code}: {body}"
