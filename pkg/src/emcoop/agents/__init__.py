from .base import InterruptDecision, PlanDecision, Policy, PolicyContext
from .scripted import (
    FollowFeedbackPolicy,
    GreedyCollectorPolicy,
    IdlerPolicy,
    OracleCoordinatorPolicy,
    RandomWalkerPolicy,
    make_scripted_policy,
)
from .remote import RemotePolicy, RemotePolicyError, SchemaViolationError
