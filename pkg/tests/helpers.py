"""Test doubles shared by several test modules."""

from __future__ import annotations

from collections import Counter
from typing import Callable

from ecreport.agents import load_catalog
from ecreport.gateway import ChatRequest, ChatResponse
from ecreport.model import AgentRole


class RoleBackend:
    """Replies by agent role, identified from the request's system prompt.

    ``client`` receives the 1-based number of the Client review and returns
    the reply text. Writers return numbered drafts, feedback agents numbered
    notes.
    """

    def __init__(self, client: Callable[[int], str] = lambda n: "Needs more detail."):
        self.client = client
        self.by_prompt = {spec.init_prompt: role for role, spec in load_catalog().items()}
        self.calls: Counter[AgentRole] = Counter()
        self.requests: list[ChatRequest] = []

    def send(self, request: ChatRequest) -> ChatResponse:
        role = self.by_prompt[request.system_prompt]
        self.calls[role] += 1
        self.requests.append(request)
        n = self.calls[role]
        if role is AgentRole.CLIENT:
            return ChatResponse(self.client(n))
        if role is AgentRole.WRITER:
            return ChatResponse(f"Draft {n}: revenue rose and guidance was kept.")
        return ChatResponse(f"{role.value} note {n}.")


def never_terminate(n: int) -> str:
    return f"Review {n}: please add more on the outlook."


def always_terminate(n: int) -> str:
    return "TERMINATE"


def terminate_at(k: int) -> Callable[[int], str]:
    return lambda n: "TERMINATE" if n >= k else f"Review {n}: not yet."
