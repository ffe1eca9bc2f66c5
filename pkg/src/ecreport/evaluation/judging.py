"""LLM judges: characteristic labelling, pairwise preference, and their analysis."""

from __future__ import annotations

import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from statistics import fmean
from typing import Iterable, Sequence

from ecreport.agents import _fill, read_prompt
from ecreport.evaluation.rubric import (
    Characteristic,
    CharacteristicJudgment,
    CharacteristicLabel,
    PreferenceOutcome,
    Source,
)
from ecreport.evaluation.stats import Coefficient, kendall, pearson, spearman
from ecreport.gateway import Backend, ChatMessage, ChatRequest, ChatRole, RetryPolicy, complete
from ecreport.model import EcReportError, Report

logger = logging.getLogger(__name__)


class UnparseableJudgment(EcReportError):
    def __init__(self, message: str, reply: str):
        super().__init__(message)
        self.reply = reply


class MisalignedReports(EcReportError):
    def __init__(self, message: str, report_ids: Iterable[str]):
        super().__init__(message)
        self.report_ids = sorted(report_ids)


def characteristic_prompt(report_text: str, c: Characteristic) -> str:
    return _fill(
        read_prompt("judge_characteristic.txt"),
        criterion=c.display_name,
        description=c.description,
        generated_report=report_text,
    )


def preference_prompt(report1: str, report2: str) -> str:
    return _fill(read_prompt("judge_preference.txt"), report1=report1, report2=report2)


def _judge_request(prompt: str, model_id: str, temperature: float) -> ChatRequest:
    return ChatRequest(
        system_prompt="",
        messages=(ChatMessage(ChatRole.USER, prompt),),
        model_id=model_id,
        temperature=temperature,
        max_output_tokens=512,
    )


_LABEL_RE = re.compile(r"(?<![\d.])([1-4])(?!\d|\.\d)")


def parse_label(reply: str) -> CharacteristicLabel:
    """Label from the first standalone digit 1-4 of a characteristic reply.

    Digits are prompt positions (1 = insightful ... 4 = not reported) and are
    converted to the score-ordered label.
    """
    m = _LABEL_RE.search(reply)
    if not m:
        raise UnparseableJudgment("no label number 1-4 in judge reply", reply)
    return CharacteristicLabel.from_prompt_number(int(m.group(1)))


def judge_characteristic(
    report: Report | str,
    c: Characteristic,
    backend: Backend,
    model_id: str,
    report_id: str | None = None,
    temperature: float = 0.0,
    retry: RetryPolicy | None = None,
) -> CharacteristicJudgment:
    text = report.text if isinstance(report, Report) else report
    if report_id is None:
        report_id = report.source_transcript_id if isinstance(report, Report) else ""
    reply = complete(_judge_request(characteristic_prompt(text, c), model_id, temperature), backend, retry).text
    return CharacteristicJudgment(report_id, c, parse_label(reply), model_id)


_LEADING_CHOICE_RE = re.compile(r"^\W*(?:report\s*)?#?\s*([12])(?!\d)", re.IGNORECASE)
_ANY_CHOICE_RE = re.compile(r"\breport\s*#?\s*([12])(?!\d)", re.IGNORECASE)
# "Report 1 and Report 2 ..." leads with a number but picks neither.
_JOINED_RE = re.compile(r"\s*(?:(?:and|or|vs|versus)\b|&)", re.IGNORECASE)


def parse_preference(reply: str) -> tuple[int, str]:
    """(1 or 2, rationale) from a preference reply.

    The number may lead the reply, optionally as "Report N". Otherwise a
    reply naming exactly one of "Report 1" / "Report 2" is accepted.
    """
    m = _LEADING_CHOICE_RE.match(reply)
    if m and not _JOINED_RE.match(reply, m.end()):
        rationale = re.sub(r"^[\W_]+", "", reply[m.end():]).strip()
        return int(m.group(1)), rationale
    named = {int(x) for x in _ANY_CHOICE_RE.findall(reply)}
    if len(named) == 1:
        return named.pop(), reply.strip()
    raise UnparseableJudgment("reply does not name report 1 or 2", reply)


def judge_preference(
    report_a: str,
    report_b: str,
    backend: Backend,
    model_id: str,
    pair_id: str = "",
    first_shown: Source = Source.GENERATED,
    temperature: float = 0.0,
    retry: RetryPolicy | None = None,
) -> PreferenceOutcome:
    """Ask which of two reports the judge recommends.

    ``report_a`` is shown as REPORT 1 and is taken to be of kind ``first_shown``.
    """
    if not report_a.strip() or not report_b.strip():
        raise ValueError("both reports must be non-empty")
    reply = complete(_judge_request(preference_prompt(report_a, report_b), model_id, temperature), backend, retry).text
    number, rationale = parse_preference(reply)
    choice = first_shown if number == 1 else first_shown.other
    return PreferenceOutcome(pair_id, model_id, first_shown, choice, rationale)


# --------------------------------------------------------------------------
# Positional bias
# --------------------------------------------------------------------------


@dataclass
class BiasReport:
    """Order-swapped preference results for one judge.

    Rates are percentages. Ordering 1 shows the generated report first,
    ordering 2 the reference report.
    """

    judge: str
    n_pairs: int
    generated_rate: dict[int, float]
    reference_rate: dict[int, float]
    first_position_rate: float
    consistency_rate: float
    unparseable: int
    outcomes: list[PreferenceOutcome] = field(default_factory=list, repr=False)


ORDERINGS = {1: Source.GENERATED, 2: Source.REFERENCE}


def summarize_preferences(outcomes: Sequence[PreferenceOutcome], judge: str, n_pairs: int | None = None,
                          unparseable: int = 0) -> BiasReport:
    by_order: dict[int, list[PreferenceOutcome]] = {1: [], 2: []}
    by_pair: dict[str, dict[int, Source]] = defaultdict(dict)
    for o in outcomes:
        order = 1 if o.first_shown is Source.GENERATED else 2
        by_order[order].append(o)
        by_pair[o.pair_id][order] = o.choice

    def pct(hits: int, total: int) -> float:
        return 100.0 * hits / total if total else float("nan")

    generated = {k: pct(sum(o.choice is Source.GENERATED for o in v), len(v)) for k, v in by_order.items()}
    reference = {k: pct(sum(o.choice is Source.REFERENCE for o in v), len(v)) for k, v in by_order.items()}
    both = [p for p in by_pair.values() if len(p) == 2]
    return BiasReport(
        judge=judge,
        n_pairs=n_pairs if n_pairs is not None else len(by_pair),
        generated_rate=generated,
        reference_rate=reference,
        first_position_rate=pct(sum(o.chose_first for o in outcomes), len(outcomes)),
        consistency_rate=pct(sum(p[1] == p[2] for p in both), len(both)),
        unparseable=unparseable,
        outcomes=list(outcomes),
    )


def positional_bias_study(
    pairs: Sequence[tuple[str, str]],
    backend: Backend,
    model_id: str,
    pair_ids: Sequence[str] | None = None,
    temperature: float = 0.0,
    retry: RetryPolicy | None = None,
) -> BiasReport:
    """Judge every (generated, reference) pair in both orders.

    Unparseable replies are counted and left out of every rate.
    """
    if not pairs:
        raise ValueError("positional_bias_study needs at least one pair")
    pair_ids = list(pair_ids) if pair_ids is not None else [f"pair-{i}" for i in range(len(pairs))]
    outcomes: list[PreferenceOutcome] = []
    unparseable = 0
    for pid, (generated, reference) in zip(pair_ids, pairs):
        for order, first in ORDERINGS.items():
            a, b = (generated, reference) if first is Source.GENERATED else (reference, generated)
            try:
                outcomes.append(judge_preference(a, b, backend, model_id, pid, first, temperature, retry))
            except UnparseableJudgment as exc:
                logger.warning("pair %s ordering #%d: unparseable reply %r", pid, order, exc.reply[:80])
                unparseable += 1
    return summarize_preferences(outcomes, model_id, len(pairs), unparseable)


# --------------------------------------------------------------------------
# Correlation with human judges
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationStats:
    pearson: Coefficient
    spearman: Coefficient
    kendall: Coefficient
    n: int
    excluded: int = 0


def _scores_by_report(judgments: Iterable[CharacteristicJudgment], c: Characteristic) -> dict[str, list[int]]:
    out: dict[str, list[int]] = defaultdict(list)
    for j in judgments:
        if j.characteristic is c:
            out[j.report_id].append(j.label.score)
    return out


def correlation_stats(x: Sequence[float], y: Sequence[float], excluded: int = 0) -> CorrelationStats:
    return CorrelationStats(pearson(x, y), spearman(x, y), kendall(x, y), len(x), excluded)


def correlate_judges(
    llm: Sequence[CharacteristicJudgment],
    human: Sequence[CharacteristicJudgment],
    c: Characteristic,
    unparseable: Iterable[str] = (),
) -> CorrelationStats:
    """Correlate LLM scores with per-report mean human scores for ``c``.

    Reports listed in ``unparseable`` (the LLM gave no usable label) are
    dropped from both sides and counted in ``excluded``.
    """
    skipped = set(unparseable)
    llm_scores = _scores_by_report(llm, c)
    human_scores = _scores_by_report(human, c)
    for rid in skipped:
        llm_scores.pop(rid, None)
    humans_kept = {rid: s for rid, s in human_scores.items() if rid not in skipped}
    mismatch = set(llm_scores) ^ set(humans_kept)
    if mismatch:
        raise MisalignedReports(
            f"{c.value}: report ids judged by only one side: {sorted(mismatch)}", mismatch
        )
    ids = sorted(llm_scores)
    x = [fmean(llm_scores[r]) for r in ids]
    y = [fmean(humans_kept[r]) for r in ids]
    return correlation_stats(x, y, excluded=len(skipped & set(human_scores)))


def correlate_per_evaluator(
    llm: Sequence[CharacteristicJudgment],
    human: Sequence[CharacteristicJudgment],
    c: Characteristic,
    unparseable: Iterable[str] = (),
) -> dict[str, CorrelationStats]:
    """One :class:`CorrelationStats` per human judge instead of their average."""
    evaluators = sorted({h.judge for h in human})
    return {
        e: correlate_judges(llm, [h for h in human if h.judge == e], c, unparseable)
        for e in evaluators
    }
