"""Domain types shared across the package.

Transcripts, conversation traces and reports are immutable values. Each type
knows how to turn itself into plain JSON-compatible dicts and back, which is
what the file formats in :mod:`ecreport.io` are built on.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable


class EcReportError(Exception):
    """Base class for every error raised by this package."""


class TranscriptError(EcReportError):
    pass


class EmptyTranscript(TranscriptError):
    pass


class BadQuarter(TranscriptError):
    pass


class NonContiguousIndices(TranscriptError):
    pass


class NoDraft(EcReportError):
    pass


class SpeakerRole(str, Enum):
    MANAGEMENT = "Management"
    ANALYST = "Analyst"
    OPERATOR = "Operator"
    OTHER = "Other"


class Section(str, Enum):
    PREPARED = "Prepared"
    QA = "QA"


class AgentRole(str, Enum):
    WRITER = "Writer"
    CLIENT = "Client"
    ANALYST = "Analyst"
    PSYCHOLOGIST = "Psychologist"
    EDITOR = "Editor"

    @property
    def is_feedback(self) -> bool:
        return self in FEEDBACK_ROLES


FEEDBACK_ROLES = (AgentRole.ANALYST, AgentRole.PSYCHOLOGIST, AgentRole.EDITOR)


class MessageKind(str, Enum):
    TASK_BRIEF = "TaskBrief"
    DRAFT = "Draft"
    FEEDBACK = "Feedback"
    TERMINATION = "Termination"


class TerminatedBy(str, Enum):
    CLIENT_TERMINATE = "ClientTerminate"
    ROUND_CAP = "RoundCap"


@dataclass(frozen=True)
class Speaker:
    name: str
    role: SpeakerRole
    title: str | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise TranscriptError("speaker name must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "role": self.role.value, "title": self.title}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Speaker:
        return cls(name=d["name"], role=SpeakerRole(d["role"]), title=d.get("title"))


@dataclass(frozen=True)
class Utterance:
    index: int
    speaker: Speaker
    text: str
    section: Section

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "speaker": self.speaker.to_dict(),
            "section": self.section.value,
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Utterance:
        return cls(
            index=int(d["index"]),
            speaker=Speaker.from_dict(d["speaker"]),
            text=d["text"],
            section=Section(d["section"]),
        )


@dataclass(frozen=True)
class Transcript:
    company_symbol: str
    year: int
    quarter: int
    call_date: dt.date
    utterances: tuple[Utterance, ...]

    @property
    def fiscal_quarter(self) -> tuple[int, int]:
        return (self.year, self.quarter)

    @property
    def transcript_id(self) -> str:
        return f"{self.company_symbol}-{self.year}-Q{self.quarter}"

    def full_text(self) -> str:
        return "\n".join(u.text for u in self.utterances)

    def to_dict(self) -> dict[str, Any]:
        return {
            "company_symbol": self.company_symbol,
            "year": self.year,
            "quarter": self.quarter,
            "call_date": self.call_date.isoformat(),
            "utterances": [u.to_dict() for u in self.utterances],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Transcript:
        return cls(
            company_symbol=d["company_symbol"],
            year=int(d["year"]),
            quarter=int(d["quarter"]),
            call_date=dt.date.fromisoformat(d["call_date"]),
            utterances=tuple(Utterance.from_dict(u) for u in d["utterances"]),
        )


def validate_transcript(raw: Transcript) -> Transcript:
    """Return ``raw`` unchanged if it satisfies every transcript invariant."""
    if not raw.utterances:
        raise EmptyTranscript(f"transcript {raw.company_symbol!r} has no utterances")
    if not raw.company_symbol:
        raise TranscriptError("company_symbol must be non-empty")
    if not 1 <= raw.quarter <= 4:
        raise BadQuarter(f"quarter must be in 1..4, got {raw.quarter}")
    indices = [u.index for u in raw.utterances]
    if indices != list(range(len(indices))):
        raise NonContiguousIndices(f"utterance indices must run 0..{len(indices) - 1}, got {indices}")
    for u in raw.utterances:
        if not u.text:
            raise TranscriptError(f"utterance {u.index} has empty text")
    return raw


def management_utterances(t: Transcript, include_prepared: bool = False) -> list[Utterance]:
    """Management utterances of the Q&A section, in transcript order.

    With ``include_prepared`` the prepared remarks by management are kept too.
    """
    sections = {Section.QA, Section.PREPARED} if include_prepared else {Section.QA}
    return [
        u for u in t.utterances
        if u.speaker.role is SpeakerRole.MANAGEMENT and u.section in sections
    ]


@dataclass(frozen=True)
class Message:
    turn: int
    sender: AgentRole
    kind: MessageKind
    text: str

    def __post_init__(self) -> None:
        if self.kind is MessageKind.DRAFT and self.sender is not AgentRole.WRITER:
            raise EcReportError("only the Writer may send drafts")
        if self.kind is MessageKind.TERMINATION and self.sender is not AgentRole.CLIENT:
            raise EcReportError("only the Client may terminate")

    def to_dict(self) -> dict[str, Any]:
        return {
            "turn": self.turn,
            "sender": self.sender.value,
            "kind": self.kind.value,
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Message:
        return cls(
            turn=int(d["turn"]),
            sender=AgentRole(d["sender"]),
            kind=MessageKind(d["kind"]),
            text=d["text"],
        )


@dataclass(frozen=True)
class ConversationTrace:
    """Ordered message log of one generation run.

    ``generated_at`` is kept for bookkeeping but ignored by ``==`` so that
    replayed runs compare equal to their recordings.
    """

    transcript_id: str
    messages: tuple[Message, ...] = ()
    rounds_used: int = 0
    terminated_by: TerminatedBy | None = None
    round_cap: int | None = None
    generated_at: dt.datetime | None = field(default=None, compare=False)

    def append(self, sender: AgentRole, kind: MessageKind, text: str) -> ConversationTrace:
        msg = Message(turn=len(self.messages), sender=sender, kind=kind, text=text)
        return self._replace(messages=self.messages + (msg,))

    def _replace(self, **changes: Any) -> ConversationTrace:
        values = {
            "transcript_id": self.transcript_id,
            "messages": self.messages,
            "rounds_used": self.rounds_used,
            "terminated_by": self.terminated_by,
            "round_cap": self.round_cap,
            "generated_at": self.generated_at,
        }
        values.update(changes)
        return ConversationTrace(**values)

    def header(self) -> dict[str, Any]:
        return {
            "record": "header",
            "transcript_id": self.transcript_id,
            "rounds_used": self.rounds_used,
            "terminated_by": self.terminated_by.value if self.terminated_by else None,
            "round_cap": self.round_cap,
            "generated_at": self.generated_at.isoformat() if self.generated_at else None,
        }

    @classmethod
    def from_records(cls, records: Iterable[dict[str, Any]]) -> ConversationTrace:
        records = list(records)
        if not records or records[0].get("record") != "header":
            raise EcReportError("trace must start with a header record")
        head = records[0]
        messages = tuple(Message.from_dict(r) for r in records[1:])
        for i, m in enumerate(messages):
            if m.turn != i:
                raise EcReportError(f"trace turn ordinals not contiguous at position {i}")
        generated_at = head.get("generated_at")
        terminated_by = head.get("terminated_by")
        return cls(
            transcript_id=head["transcript_id"],
            messages=messages,
            rounds_used=int(head["rounds_used"]),
            terminated_by=TerminatedBy(terminated_by) if terminated_by else None,
            round_cap=head.get("round_cap"),
            generated_at=dt.datetime.fromisoformat(generated_at) if generated_at else None,
        )

    def to_records(self) -> list[dict[str, Any]]:
        return [self.header()] + [{"record": "message", **m.to_dict()} for m in self.messages]


def latest_report(trace: ConversationTrace) -> str:
    """Text of the last draft in ``trace``."""
    for msg in reversed(trace.messages):
        if msg.kind is MessageKind.DRAFT:
            return msg.text
    raise NoDraft(f"trace {trace.transcript_id!r} contains no draft")


@dataclass(frozen=True)
class Report:
    text: str
    source_transcript_id: str
    agent_config: frozenset[AgentRole]
    generated_at: dt.datetime | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.text:
            raise EcReportError("report text must be non-empty")
        missing = {AgentRole.WRITER, AgentRole.CLIENT} - set(self.agent_config)
        if missing:
            raise EcReportError(f"report agent_config lacks {sorted(r.value for r in missing)}")
