"""HTTP adapter for a language-model policy backend.

The backend is a single JSON endpoint; each invocation posts the agent's
observation summary plus the invocation mode and validates the reply against
the response schemas.  Schema violations and exhausted retries degrade to a
safe default (a no-op plan or a resume) rather than crashing the episode.
"""

from __future__ import annotations

import json
import os
import time
from typing import Any, Optional

import requests
from pydantic import ValidationError

from .base import (
    REPLAN,
    RESUME,
    InterruptDecision,
    PlanDecision,
    Policy,
    PolicyContext,
)
from .schemas import InterruptResponse, MessageResponse, PlanResponse

ENV_API_BASE = "EMCOOP_API_BASE"
ENV_API_KEY = "EMCOOP_API_KEY"
ENV_MODEL = "EMCOOP_MODEL"

DEFAULT_TIMEOUT = 30.0
MAX_RETRIES = 3


class RemotePolicyError(Exception):
    pass


class SchemaViolationError(RemotePolicyError):
    """The backend replied with JSON that does not match the schema."""


class RemotePolicy(Policy):
    def __init__(
        self,
        agent: int,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        model: Optional[str] = None,
        session: Optional[requests.Session] = None,
        timeout: float = DEFAULT_TIMEOUT,
    ):
        self.agent = agent
        self.base_url = (base_url or os.environ.get(ENV_API_BASE, "")).rstrip("/")
        if not self.base_url:
            raise RemotePolicyError(f"{ENV_API_BASE} is not set")
        self.api_key = api_key or os.environ.get(ENV_API_KEY, "")
        self.model = model or os.environ.get(ENV_MODEL, "")
        self.session = session or requests.Session()
        self.timeout = timeout
        self.schema_violations = 0

    def _post(self, mode: str, ctx: PolicyContext, extra: dict[str, Any]) -> dict[str, Any]:
        body = {
            "mode": mode,
            "model": self.model,
            "agent": f"agent_{ctx.agent}",
            "step": ctx.step,
            "topology": ctx.topology.to_json(),
            "observation": ctx.env.describe(ctx.agent),
            "inbox": [
                {"sender": f"agent_{m.sender}", "content": m.payload}
                for m in ctx.inbox
            ],
            "feedback": ctx.feedback,
        }
        body.update(extra)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        started = time.monotonic()
        last_exc: Optional[Exception] = None
        try:
            for attempt in range(MAX_RETRIES):
                try:
                    resp = self.session.post(
                        f"{self.base_url}/v1/act",
                        data=json.dumps(body),
                        headers=headers,
                        timeout=self.timeout,
                    )
                    if resp.status_code >= 500:
                        last_exc = RemotePolicyError(f"server error {resp.status_code}")
                        time.sleep(min(2.0 ** attempt * 0.1, 2.0))
                        continue
                    if resp.status_code != 200:
                        raise RemotePolicyError(f"backend returned {resp.status_code}")
                    return resp.json()
                except (requests.Timeout, requests.ConnectionError) as exc:
                    last_exc = exc
                    time.sleep(min(2.0 ** attempt * 0.1, 2.0))
            raise RemotePolicyError(f"backend unreachable: {last_exc}")
        finally:
            self.last_duration = time.monotonic() - started

    def plan(self, ctx: PolicyContext) -> PlanDecision:
        try:
            raw = self._post("plan", ctx, {})
            parsed = PlanResponse.model_validate(raw)
            return PlanDecision(list(parsed.tasks))
        except (ValidationError, json.JSONDecodeError):
            self.schema_violations += 1
            return PlanDecision([ctx.env.noop_concept()])
        except RemotePolicyError:
            return PlanDecision([ctx.env.noop_concept()])

    def on_interrupt(self, ctx: PolicyContext) -> InterruptDecision:
        try:
            raw = self._post("interrupt", ctx, {})
            parsed = InterruptResponse.model_validate(raw)
            if parsed.decision == "replan":
                return InterruptDecision(REPLAN, list(parsed.new_plan or []))
            return InterruptDecision(RESUME)
        except (ValidationError, json.JSONDecodeError):
            self.schema_violations += 1
            return InterruptDecision(RESUME)
        except RemotePolicyError:
            return InterruptDecision(RESUME)

    def compose_message(self, ctx: PolicyContext, purpose: str) -> str:
        try:
            raw = self._post("message", ctx, {"purpose": purpose})
            parsed = MessageResponse.model_validate(raw)
            return parsed.content
        except (ValidationError, json.JSONDecodeError):
            self.schema_violations += 1
            return "{}"
        except RemotePolicyError:
            return "{}"
