"""Evaluation rubric: report characteristics, labels, and judgment records."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Any


class Characteristic(str, Enum):
    FINANCIAL_TAKEAWAYS = "FinancialTakeaways"
    FINANCIAL_CONTEXT = "FinancialContext"
    MANAGEMENT_ATTITUDES = "ManagementAttitudes"
    MANAGEMENT_EXPECTATION = "ManagementExpectation"
    FUTURE_EVENTS = "FutureEvents"

    @property
    def display_name(self) -> str:
        return _TITLES[self]

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self]


_TITLES = {
    Characteristic.FINANCIAL_TAKEAWAYS: "Financial takeaways",
    Characteristic.FINANCIAL_CONTEXT: "Financial context",
    Characteristic.MANAGEMENT_ATTITUDES: "Management attitudes",
    Characteristic.MANAGEMENT_EXPECTATION: "Management expectation",
    Characteristic.FUTURE_EVENTS: "Possible future events",
}

_DESCRIPTIONS = {
    Characteristic.FINANCIAL_TAKEAWAYS:
        "The key financial details from the meeting (i.e., numerical statistics relating to company "
        "performance for the quarter).",
    Characteristic.FINANCIAL_CONTEXT:
        "Any additional information (e.g., financial details from previous quarters) that helps to "
        "contextualize the current financial performance.",
    Characteristic.MANAGEMENT_ATTITUDES:
        "Information on how management (e.g., CEO, CFO, etc..) feels about the company’s financial "
        "performance.",
    Characteristic.MANAGEMENT_EXPECTATION:
        "Details about how the company is expected to perform in the future/next quarter.",
    Characteristic.FUTURE_EVENTS:
        "Details surrounding any noteworthy events/scenarios that are likely to occur in the future.",
}


class CharacteristicLabel(IntEnum):
    """Judge labels; the integer value is the correlation score (4 best)."""

    REPORTED_INSIGHTFUL = 4
    REPORTED_REASONABLE = 3
    REPORTED_NOT_USEFUL = 2
    NOT_REPORTED = 1

    @property
    def score(self) -> int:
        return int(self)

    @property
    def prompt_number(self) -> int:
        """Position of this label in the judge prompt, which lists the best label first."""
        return 5 - int(self)

    @classmethod
    def from_prompt_number(cls, n: int) -> CharacteristicLabel:
        if n not in (1, 2, 3, 4):
            raise ValueError(f"prompt label number must be 1..4, got {n}")
        return cls(5 - n)

    @classmethod
    def from_score(cls, score: int) -> CharacteristicLabel:
        return cls(score)


@dataclass(frozen=True)
class CharacteristicJudgment:
    report_id: str
    characteristic: Characteristic
    label: CharacteristicLabel
    judge: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "report_id": self.report_id,
            "characteristic": self.characteristic.value,
            "label": self.label.name,
            "score": self.label.score,
            "judge": self.judge,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> CharacteristicJudgment:
        if d.get("label") is not None:
            label = CharacteristicLabel[d["label"]]
        else:
            label = CharacteristicLabel.from_score(int(d["score"]))
        return cls(d["report_id"], Characteristic(d["characteristic"]), label, d["judge"])


class Source(str, Enum):
    GENERATED = "Generated"
    REFERENCE = "Reference"

    @property
    def other(self) -> Source:
        return Source.REFERENCE if self is Source.GENERATED else Source.GENERATED


@dataclass(frozen=True)
class PreferenceOutcome:
    pair_id: str
    judge: str
    first_shown: Source
    choice: Source
    rationale: str = ""

    @property
    def chose_first(self) -> bool:
        return self.choice is self.first_shown

    def to_dict(self) -> dict[str, Any]:
        return {
            "pair_id": self.pair_id,
            "judge": self.judge,
            "first_shown": self.first_shown.value,
            "choice": self.choice.value,
            "rationale": self.rationale,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> PreferenceOutcome:
        return cls(d["pair_id"], d["judge"], Source(d["first_shown"]), Source(d["choice"]), d.get("rationale", ""))
