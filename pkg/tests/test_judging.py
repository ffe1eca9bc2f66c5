import math

import pytest

from ecreport.evaluation import (
    Characteristic,
    CharacteristicJudgment,
    CharacteristicLabel,
    MisalignedReports,
    Source,
    UnparseableJudgment,
)
from ecreport.evaluation.judging import (
    characteristic_prompt,
    correlate_judges,
    correlate_per_evaluator,
    judge_characteristic,
    judge_preference,
    parse_label,
    parse_preference,
    positional_bias_study,
    preference_prompt,
)
from ecreport.evaluation.stats import NOT_DEFINED
from ecreport.gateway import ChatResponse, ConstantBackend, ScriptedBackend

FT = Characteristic.FINANCIAL_TAKEAWAYS
L = CharacteristicLabel


def cj(rid, score, judge="j", c=FT):
    return CharacteristicJudgment(rid, c, L.from_score(score), judge)


def test_five_characteristics():
    assert len(Characteristic) == 5


@pytest.mark.parametrize("reply, label, score", [
    ("1", L.REPORTED_INSIGHTFUL, 4),
    ("4", L.NOT_REPORTED, 1),
    ("2. Reported and reasonable", L.REPORTED_REASONABLE, 3),
    ("Label: 3", L.REPORTED_NOT_USEFUL, 2),
    ("1.", L.REPORTED_INSIGHTFUL, 4),
])
def test_parse_label(reply, label, score):
    assert parse_label(reply) is label
    assert parse_label(reply).score == score


@pytest.mark.parametrize("reply", ["I think it's great", "Rating 5", "EPS rose 1.5%", ""])
def test_unparseable_label(reply):
    with pytest.raises(UnparseableJudgment):
        parse_label(reply)


def test_judge_characteristic_sends_the_filled_prompt():
    backend = ScriptedBackend(["1"])
    j = judge_characteristic("Revenue grew 12%.", FT, backend, "judge-x", report_id="r1")
    assert (j.report_id, j.label, j.judge) == ("r1", L.REPORTED_INSIGHTFUL, "judge-x")
    prompt = characteristic_prompt("Revenue grew 12%.", FT)
    assert FT.display_name in prompt and FT.description in prompt and "Revenue grew 12%." in prompt
    assert "{" not in prompt


def test_judge_characteristic_unparseable():
    with pytest.raises(UnparseableJudgment) as err:
        judge_characteristic("text", FT, ScriptedBackend(["I think it's great"]), "m")
    assert err.value.reply == "I think it's great"


@pytest.mark.parametrize("reply, number, rationale", [
    ("1 — more detailed risk assessment", 1, "more detailed risk assessment"),
    ("Report 2 because it covers guidance", 2, "because it covers guidance"),
    ("**1**: clearer", 1, "clearer"),
    ("I would recommend Report 1 to investors.", 1, "I would recommend Report 1 to investors."),
])
def test_parse_preference(reply, number, rationale):
    assert parse_preference(reply) == (number, rationale)


@pytest.mark.parametrize("reply", ["both are fine", "Report 1 and Report 2 are similar", "1 or 2, hard to say", "12 reasons"])
def test_unparseable_preference(reply):
    with pytest.raises(UnparseableJudgment):
        parse_preference(reply)


@pytest.mark.parametrize("first, reply, chosen", [
    (Source.GENERATED, "1", Source.GENERATED),
    (Source.REFERENCE, "1", Source.REFERENCE),
    (Source.GENERATED, "Report 2 because", Source.REFERENCE),
])
def test_judge_preference_maps_position_to_source(first, reply, chosen):
    out = judge_preference("first text", "second text", ScriptedBackend([reply]), "m", "p", first)
    assert out.choice is chosen and out.first_shown is first


def test_preference_prompt_order():
    prompt = preference_prompt("AAA", "BBB")
    assert prompt.index("AAA") < prompt.index("BBB")


def test_preference_needs_text():
    with pytest.raises(ValueError):
        judge_preference("", "x", ConstantBackend("1"), "m")


class PicksGenerated:
    """Mock judge that always recommends the report containing GEN."""

    def send(self, request):
        text = request.messages[0].text
        first = text.index("REPORT 1")
        second = text.index("REPORT 2")
        gen = text.index("GEN-")
        return ChatResponse("1" if first < gen < second else "2")


PAIRS = [(f"GEN-{i} generated", f"REF-{i} reference") for i in range(6)]


def test_bias_always_first():
    bias = positional_bias_study(PAIRS, ConstantBackend("1"), "m")
    assert bias.generated_rate == {1: 100.0, 2: 0.0}
    assert bias.reference_rate == {1: 0.0, 2: 100.0}
    assert bias.first_position_rate == 100.0
    assert bias.consistency_rate == 0.0


def test_bias_always_generated():
    bias = positional_bias_study(PAIRS, PicksGenerated(), "m")
    assert bias.generated_rate == {1: 100.0, 2: 100.0}
    assert bias.consistency_rate == 100.0
    assert bias.first_position_rate == 50.0


def test_bias_counts_unparseable():
    replies = ["1", "both are fine"] * len(PAIRS)
    bias = positional_bias_study(PAIRS, ScriptedBackend(replies), "m")
    assert bias.unparseable == len(PAIRS)
    assert bias.generated_rate[1] == 100.0
    assert math.isnan(bias.generated_rate[2])
    for k in (1,):
        assert bias.generated_rate[k] + bias.reference_rate[k] == 100.0


def test_bias_needs_pairs():
    with pytest.raises(ValueError):
        positional_bias_study([], ConstantBackend("1"), "m")


def test_correlation_identity():
    llm = [cj(f"r{i}", s) for i, s in enumerate([1, 2, 3, 4, 2, 3, 1, 4, 3, 2])]
    human = [cj(j.report_id, j.label.score, "h") for j in llm]
    stats = correlate_judges(llm, human, FT)
    assert (stats.pearson, stats.spearman, stats.kendall, stats.n) == (1.0, 1.0, 1.0, 10)


def test_human_scores_are_averaged():
    llm = [cj("a", 3), cj("b", 1), cj("c", 4)]
    human = [cj("a", 4, "h1"), cj("a", 2, "h2"), cj("b", 1, "h1"), cj("c", 4, "h1")]
    stats = correlate_judges(llm, human, FT)
    # a averages to 3.0, so the vectors are identical.
    assert stats.pearson == pytest.approx(1.0)


def test_other_characteristics_ignored():
    llm = [cj("a", 1), cj("b", 2), cj("a", 4, c=Characteristic.FUTURE_EVENTS)]
    human = [cj("a", 1, "h"), cj("b", 2, "h")]
    assert correlate_judges(llm, human, FT).n == 2


def test_misaligned_reports():
    with pytest.raises(MisalignedReports) as err:
        correlate_judges([cj("a", 1), cj("b", 2)], [cj("a", 1, "h"), cj("c", 2, "h")], FT)
    assert err.value.report_ids == ["b", "c"]


def test_unparseable_reports_excluded_and_counted():
    llm = [cj("a", 1), cj("b", 2), cj("c", 3)]
    human = [cj(r, s, "h") for r, s in [("a", 1), ("b", 2), ("c", 3), ("d", 4)]]
    stats = correlate_judges(llm, human, FT, unparseable=["d"])
    assert (stats.n, stats.excluded) == (3, 1)


def test_constant_scores_not_defined():
    stats = correlate_judges([cj("a", 4), cj("b", 4)], [cj("a", 1, "h"), cj("b", 3, "h")], FT)
    assert stats.pearson is NOT_DEFINED and stats.kendall is NOT_DEFINED


def test_per_evaluator():
    llm = [cj("a", 1), cj("b", 2), cj("c", 3)]
    human = [cj("a", 1, "h1"), cj("b", 2, "h1"), cj("c", 3, "h1"),
             cj("a", 3, "h2"), cj("b", 2, "h2"), cj("c", 1, "h2")]
    out = correlate_per_evaluator(llm, human, FT)
    assert out["h1"].pearson == pytest.approx(1.0)
    assert out["h2"].pearson == pytest.approx(-1.0)
