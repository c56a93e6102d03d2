"""Pydantic schemas for structured policy responses from a remote backend."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from ..envs.base import CONCEPT_RE


class TaskSpec(BaseModel):
    """One concept in ``kind(args)`` form."""

    concept: str = Field(min_length=3, max_length=200)

    @field_validator("concept")
    @classmethod
    def well_formed(cls, v: str) -> str:
        if not CONCEPT_RE.match(v.strip()):
            raise ValueError(f"malformed concept: {v!r}")
        return v.strip()


class PlanResponse(BaseModel):
    tasks: list[str] = Field(min_length=1, max_length=10)
    rationale: str = ""

    @field_validator("tasks")
    @classmethod
    def tasks_well_formed(cls, v: list[str]) -> list[str]:
        return [TaskSpec(concept=t).concept for t in v]


class MessageResponse(BaseModel):
    recipients: list[str] = Field(min_length=1)
    content: str = Field(max_length=4096)

    @field_validator("recipients")
    @classmethod
    def recipients_are_aliases(cls, v: list[str]) -> list[str]:
        for alias in v:
            if not alias.startswith("agent_") or not alias[len("agent_"):].isdigit():
                raise ValueError(f"bad agent alias: {alias!r}")
        return v


class InterruptResponse(BaseModel):
    decision: Literal["resume", "replan"]
    new_plan: Optional[list[str]] = None

    @model_validator(mode="after")
    def plan_required_on_replan(self) -> "InterruptResponse":
        if self.decision == "replan":
            if not self.new_plan:
                raise ValueError("replan requires new_plan")
            self.new_plan = [TaskSpec(concept=t).concept for t in self.new_plan]
        return self
