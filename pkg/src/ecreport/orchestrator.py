"""Draft, feedback, revision and Client review, run as an explicit state machine.

A run goes through these phases::

    Drafting -> Feedback(role)... -> Revising -> ClientReview -> (next round | Done)

In ``PER_AGENT`` mode the Writer revises after every single feedback message
instead of once per round. The Client reviews once per round, after the
revision; a reply ending in ``TERMINATE`` finishes the run, otherwise the run
stops when the round cap is reached.
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping

from ecreport.agents import (
    AgentSpec,
    TaskBrief,
    analyst_context,
    build_agent_turn,
    is_termination,
    load_catalog,
    psychologist_context,
)
from ecreport.gateway import Backend, GatewayError, RetryPolicy, complete, estimate_tokens
from ecreport.model import (
    FEEDBACK_ROLES,
    AgentRole,
    ConversationTrace,
    EcReportError,
    MessageKind,
    Report,
    TerminatedBy,
    latest_report,
)

logger = logging.getLogger(__name__)

DEFAULT_FEEDBACK_ORDER = (AgentRole.ANALYST, AgentRole.PSYCHOLOGIST, AgentRole.EDITOR)
ELISION_MARKER = "[earlier message elided to fit the context budget]"


class RunError(EcReportError):
    """Generation failure; ``trace`` holds the conversation up to that point."""

    def __init__(self, message: str, trace: ConversationTrace):
        super().__init__(message)
        self.trace = trace


class GatewayFailure(RunError):
    pass


class EmptyDraft(RunError):
    pass


class MissingExternalData(EcReportError):
    pass


class RevisionMode(str, Enum):
    PER_ROUND = "PerRound"
    PER_AGENT = "PerAgent"


@dataclass(frozen=True)
class RunConfig:
    feedback_roles: tuple[AgentRole, ...] = DEFAULT_FEEDBACK_ORDER
    round_cap: int = 10
    revision_mode: RevisionMode = RevisionMode.PER_ROUND
    model_id: str = "gpt-4-1106-preview"
    temperature: float = 0.0
    max_output_tokens: int = 4096
    context_token_budget: int | None = None
    include_prepared_features: bool = False
    max_feature_records: int | None = None

    def __post_init__(self) -> None:
        roles = tuple(self.feedback_roles)
        if len(set(roles)) != len(roles):
            raise ValueError(f"feedback_roles has duplicates: {[r.value for r in roles]}")
        bad = [r for r in roles if r not in FEEDBACK_ROLES]
        if bad:
            raise ValueError(f"not feedback roles: {[r.value for r in bad]}")
        if self.round_cap < 1:
            raise ValueError("round_cap must be >= 1")
        object.__setattr__(self, "feedback_roles", roles)


class Phase(str, Enum):
    DRAFTING = "Drafting"
    FEEDBACK = "Feedback"
    REVISING = "Revising"
    CLIENT_REVIEW = "ClientReview"
    DONE = "Done"


@dataclass(frozen=True)
class RunState:
    phase: Phase
    round: int
    trace: ConversationTrace
    current_report: str | None = None
    # Position in config.feedback_roles while in the Feedback phase.
    feedback_index: int = 0
    # Feedback posted since the latest draft (client reviews included).
    pending_feedback: int = 0


@dataclass
class Orchestrator:
    """Runs one conversation. Instances are single-use and not thread-safe."""

    brief: TaskBrief
    config: RunConfig
    backend: Backend
    catalog: Mapping[AgentRole, AgentSpec] = field(default_factory=load_catalog)
    retry: RetryPolicy | None = None
    transcript_id: str | None = None

    def __post_init__(self) -> None:
        self._extras = self._prepare_extras()

    def _prepare_extras(self) -> dict[AgentRole, str]:
        extras = {}
        t = self.brief.transcript
        if AgentRole.ANALYST in self.config.feedback_roles:
            if self.brief.earnings is None:
                raise MissingExternalData("Analyst selected but no earnings record supplied")
            extras[AgentRole.ANALYST] = analyst_context(t, self.brief.earnings)
        if AgentRole.PSYCHOLOGIST in self.config.feedback_roles:
            extras[AgentRole.PSYCHOLOGIST] = psychologist_context(
                t,
                self.brief.features,
                include_prepared=self.config.include_prepared_features,
                max_records=self.config.max_feature_records,
            )
        return extras

    # -- state machine -----------------------------------------------------

    def initial_state(self) -> RunState:
        trace = ConversationTrace(
            transcript_id=self.transcript_id or self.brief.transcript.transcript_id,
            round_cap=self.config.round_cap,
        ).append(AgentRole.CLIENT, MessageKind.TASK_BRIEF, self.brief.text)
        return RunState(Phase.DRAFTING, 0, trace)

    def step(self, state: RunState) -> RunState:
        roles = self.config.feedback_roles
        per_agent = self.config.revision_mode is RevisionMode.PER_AGENT

        if state.phase is Phase.DRAFTING:
            trace = self._draft(state.trace)
            return self._start_round(replace(state, trace=trace, current_report=latest_report(trace),
                                             pending_feedback=0))

        if state.phase is Phase.FEEDBACK:
            role = roles[state.feedback_index]
            text = self._call(role, state.trace)
            trace = state.trace.append(role, MessageKind.FEEDBACK, text)
            state = replace(state, trace=trace, pending_feedback=state.pending_feedback + 1)
            if per_agent:
                return replace(state, phase=Phase.REVISING)
            return self._after_feedback(state)

        if state.phase is Phase.REVISING:
            trace = self._draft(state.trace)
            state = replace(state, trace=trace, current_report=latest_report(trace), pending_feedback=0)
            if per_agent and roles:
                return self._after_feedback(state)
            return replace(state, phase=Phase.CLIENT_REVIEW)

        if state.phase is Phase.CLIENT_REVIEW:
            reply = self._call(AgentRole.CLIENT, state.trace)
            rounds = state.round
            if is_termination(reply):
                trace = state.trace.append(AgentRole.CLIENT, MessageKind.TERMINATION, reply)
                return self._finish(replace(state, trace=trace), TerminatedBy.CLIENT_TERMINATE)
            trace = state.trace.append(AgentRole.CLIENT, MessageKind.FEEDBACK, reply)
            state = replace(state, trace=trace, pending_feedback=state.pending_feedback + 1)
            if rounds >= self.config.round_cap:
                return self._finish(state, TerminatedBy.ROUND_CAP)
            return self._start_round(state)

        raise EcReportError(f"no transition out of {state.phase}")

    def _start_round(self, state: RunState) -> RunState:
        state = replace(state, round=state.round + 1, feedback_index=0)
        if self.config.feedback_roles:
            return replace(state, phase=Phase.FEEDBACK)
        # Without feedback agents the Writer only revises on the Client's comments.
        if state.pending_feedback:
            return replace(state, phase=Phase.REVISING)
        return replace(state, phase=Phase.CLIENT_REVIEW)

    def _after_feedback(self, state: RunState) -> RunState:
        nxt = state.feedback_index + 1
        if nxt < len(self.config.feedback_roles):
            return replace(state, phase=Phase.FEEDBACK, feedback_index=nxt)
        if self.config.revision_mode is RevisionMode.PER_AGENT:
            return replace(state, phase=Phase.CLIENT_REVIEW)
        return replace(state, phase=Phase.REVISING)

    def _finish(self, state: RunState, how: TerminatedBy) -> RunState:
        trace = state.trace._replace(rounds_used=state.round, terminated_by=how)
        return replace(state, phase=Phase.DONE, trace=trace)

    def run(self) -> tuple[Report, ConversationTrace]:
        state = self.initial_state()
        while state.phase is not Phase.DONE:
            state = self.step(state)
        trace = state.trace
        report = Report(
            text=latest_report(trace),
            source_transcript_id=trace.transcript_id,
            agent_config=frozenset({AgentRole.WRITER, AgentRole.CLIENT, *self.config.feedback_roles}),
            generated_at=trace.generated_at,
        )
        return report, trace

    # -- LLM calls -----------------------------------------------------------

    def _draft(self, trace: ConversationTrace) -> ConversationTrace:
        text = self._call(AgentRole.WRITER, trace)
        if not text.strip():
            raise EmptyDraft("Writer returned an empty draft", trace)
        return trace.append(AgentRole.WRITER, MessageKind.DRAFT, text)

    def _call(self, role: AgentRole, trace: ConversationTrace) -> str:
        request = build_agent_turn(
            self.catalog[role],
            self._fit_context(trace),
            extras=self._extras.get(role),
            model_id=self.config.model_id,
            temperature=self.config.temperature,
            max_output_tokens=self.config.max_output_tokens,
        )
        try:
            return complete(request, self.backend, self.retry).text
        except GatewayError as exc:
            raise GatewayFailure(f"{role.value} turn failed: {exc}", trace) from exc

    def _fit_context(self, trace: ConversationTrace) -> ConversationTrace:
        """Elide oldest messages until the rendered conversation fits the budget.

        The brief and the latest draft are never elided.
        """
        budget = self.config.context_token_budget
        if budget is None:
            return trace
        messages = list(trace.messages)

        def size() -> int:
            return sum(estimate_tokens(m.text) for m in messages)

        last_draft = max((i for i, m in enumerate(messages) if m.kind is MessageKind.DRAFT), default=None)
        for i, m in enumerate(messages):
            if size() <= budget:
                break
            if i == 0 or i == last_draft or m.text == ELISION_MARKER:
                continue
            messages[i] = replace(m, text=ELISION_MARKER)
        return trace._replace(messages=tuple(messages))


def run_generation(
    brief: TaskBrief,
    config: RunConfig,
    backend: Backend,
    catalog: Mapping[AgentRole, AgentSpec] | None = None,
    retry: RetryPolicy | None = None,
    transcript_id: str | None = None,
    generated_at: dt.datetime | None = None,
) -> tuple[Report, ConversationTrace]:
    """Run one generation conversation; returns the final report and its trace."""
    orch = Orchestrator(
        brief, config, backend,
        catalog=catalog if catalog is not None else load_catalog(),
        retry=retry,
        transcript_id=transcript_id,
    )
    report, trace = orch.run()
    stamp = generated_at or dt.datetime.now(dt.timezone.utc)
    trace = trace._replace(generated_at=stamp)
    return replace(report, generated_at=stamp), trace


def expected_message_count(config: RunConfig, rounds_used: int) -> int:
    """Messages in a completed run: brief + drafts + feedback + client reviews."""
    n_roles = len(config.feedback_roles)
    if not n_roles:
        drafts = rounds_used  # first draft plus one revision per later round
    elif config.revision_mode is RevisionMode.PER_ROUND:
        drafts = 1 + rounds_used
    else:
        drafts = 1 + rounds_used * n_roles
    return 1 + drafts + rounds_used * n_roles + rounds_used
