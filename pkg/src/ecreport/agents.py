"""Agent roles, their prompts, and per-turn request construction.

The prompt texts live in ``ecreport/prompts/*.txt``; a run may override any of
them with its own files through :func:`load_catalog`.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from ecreport.external import AcousticFeatureRecord, EarningsRecord, calendar_quarter, preceding_quarter
from ecreport.gateway import ChatMessage, ChatRequest, ChatRole
from ecreport.model import (
    AgentRole,
    ConversationTrace,
    EcReportError,
    SpeakerRole,
    Transcript,
    management_utterances,
)

INIT_PROMPT_FILES = {
    AgentRole.WRITER: "writer.txt",
    AgentRole.CLIENT: "client.txt",
    AgentRole.ANALYST: "analyst.txt",
    AgentRole.PSYCHOLOGIST: "psychologist.txt",
    AgentRole.EDITOR: "editor.txt",
}

TERMINATE = "TERMINATE"


class QuarterMismatch(EcReportError):
    pass


class OrphanFeature(EcReportError):
    pass


def read_prompt(name: str) -> str:
    """A packaged prompt text, without its trailing newline."""
    text = resources.files("ecreport.prompts").joinpath(name).read_text(encoding="utf-8")
    return text[:-1] if text.endswith("\n") else text


@dataclass(frozen=True)
class AgentSpec:
    role: AgentRole
    init_prompt: str

    def __post_init__(self) -> None:
        if not self.init_prompt.strip():
            raise ValueError(f"{self.role.value}: init prompt is empty")

    @property
    def needs_external_data(self) -> bool:
        return self.role in (AgentRole.ANALYST, AgentRole.PSYCHOLOGIST)


def load_catalog(overrides: Mapping[AgentRole, str | os.PathLike] | None = None) -> dict[AgentRole, AgentSpec]:
    """Built-in agent specs, with init prompts optionally replaced from files."""
    overrides = overrides or {}
    catalog = {}
    for role, fname in INIT_PROMPT_FILES.items():
        if role in overrides:
            prompt = Path(overrides[role]).read_text(encoding="utf-8").rstrip("\n")
        else:
            prompt = read_prompt(fname)
        catalog[role] = AgentSpec(role, prompt)
    return catalog


@dataclass(frozen=True)
class TaskBrief:
    """What the Client asks for, plus the data the specialist agents consume."""

    text: str
    transcript: Transcript
    audience: str = "Investor"
    earnings: EarningsRecord | None = None
    features: tuple[AcousticFeatureRecord, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.text:
            raise EcReportError("task brief text must be non-empty")


def render_transcript(t: Transcript) -> str:
    lines = []
    for u in t.utterances:
        who = u.speaker.name + (f", {u.speaker.title}" if u.speaker.title else "")
        lines.append(f"[{u.section.value}] {who} ({u.speaker.role.value}): {u.text}")
    return "\n".join(lines)


def make_task_brief(
    transcript: Transcript,
    audience: str = "Investor",
    earnings: EarningsRecord | None = None,
    features: Sequence[AcousticFeatureRecord] = (),
    template: str | None = None,
) -> TaskBrief:
    template = template if template is not None else read_prompt("task_brief.txt")
    text = _fill(
        template,
        company_symbol=transcript.company_symbol,
        year=str(transcript.year),
        quarter=str(transcript.quarter),
        call_date=transcript.call_date.isoformat(),
        audience=audience,
        transcript=render_transcript(transcript),
    )
    return TaskBrief(text, transcript, audience, earnings, tuple(features))


def _fill(template: str, **values: str) -> str:
    # Single pass so that braces inside substituted values are never re-expanded.
    return re.sub(r"\{(\w+)\}", lambda m: values.get(m.group(1), m.group(0)), template)


def build_agent_turn(
    spec: AgentSpec,
    trace: ConversationTrace,
    extras: str | None = None,
    model_id: str = "gpt-4-1106-preview",
    temperature: float = 0.0,
    max_output_tokens: int = 4096,
) -> ChatRequest:
    """The chat request for ``spec``'s next turn.

    Every prior message becomes one chat message whose text starts with the
    sender's role in capitals, e.g. ``"EDITOR: ..."``. The agent's own earlier
    messages are sent as assistant turns, everyone else's as user turns.
    """
    if not trace.messages:
        raise EcReportError("trace must contain the task brief")
    messages = [
        ChatMessage(
            ChatRole.ASSISTANT if m.sender is spec.role else ChatRole.USER,
            f"{m.sender.value.upper()}: {m.text}",
        )
        for m in trace.messages
    ]
    if extras is not None:
        messages.append(ChatMessage(ChatRole.USER, extras))
    return ChatRequest(
        system_prompt=spec.init_prompt,
        messages=tuple(messages),
        model_id=model_id,
        temperature=temperature,
        max_output_tokens=max_output_tokens,
    )


def analyst_context(transcript: Transcript, earnings: EarningsRecord, prompt: str | None = None) -> str:
    """Earnings-injection prompt followed by the previous quarter's record as JSON."""
    want = preceding_quarter(*transcript.fiscal_quarter)
    got = calendar_quarter(earnings.fiscalDateEnding)
    if got != want:
        raise QuarterMismatch(
            f"earnings for {got[0]} Q{got[1]} given, call {transcript.year} Q{transcript.quarter} "
            f"needs {want[0]} Q{want[1]}"
        )
    prompt = prompt if prompt is not None else read_prompt("analyst_data.txt")
    return prompt + "\n\n" + json.dumps(earnings.to_payload(), indent=4)


def psychologist_context(
    transcript: Transcript,
    features: Sequence[AcousticFeatureRecord],
    prompt: str | None = None,
    include_prepared: bool = False,
    max_records: int | None = None,
) -> str:
    """Audio-statistics prompt followed by one JSON block per management utterance."""
    eligible = {u.index: u for u in management_utterances(transcript, include_prepared)}
    for rec in features:
        if rec.utterance_index not in eligible:
            if rec.utterance_index >= len(transcript.utterances):
                why = "is out of range"
            elif transcript.utterances[rec.utterance_index].speaker.role is not SpeakerRole.MANAGEMENT:
                why = "is not a management utterance"
            else:
                why = "is outside the Q&A section"
            raise OrphanFeature(f"feature record for utterance {rec.utterance_index} {why}")
    ordered = sorted(features, key=lambda r: r.utterance_index)
    if max_records is not None:
        ordered = ordered[:max_records]
    prompt = prompt if prompt is not None else read_prompt("psychologist_data.txt")
    blocks = [prompt]
    for rec in ordered:
        u = eligible[rec.utterance_index]
        who = u.speaker.name + (f", {u.speaker.title}" if u.speaker.title else "")
        blocks.append(f"Utterance {u.index} ({who}):\n" + json.dumps(rec.features(), indent=4))
    return "\n\n".join(blocks)


def is_termination(client_reply: str) -> bool:
    """True if the reply, stripped of whitespace and quotes, is or ends with TERMINATE."""
    stripped = client_reply.strip(_TRIM)
    if not stripped.endswith(TERMINATE):
        return False
    head = stripped[: -len(TERMINATE)]
    return not head or not head[-1].isalnum()


# Whitespace, straight and curly quotes, and closing sentence punctuation.
_TRIM = " \t\r\n\"'`“”‘’.!"
