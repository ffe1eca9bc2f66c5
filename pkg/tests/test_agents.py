import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecreport.agents import (
    AgentSpec,
    OrphanFeature,
    QuarterMismatch,
    analyst_context,
    build_agent_turn,
    is_termination,
    load_catalog,
    make_task_brief,
    psychologist_context,
    read_prompt,
    render_transcript,
)
from ecreport.external import EarningsRecord, parse_feature_record
from ecreport.gateway import ChatRole
from ecreport.model import AgentRole, ConversationTrace, MessageKind

from conftest import FIXTURES

SAMPLE = {"fiscalDateEnding": "2021-07-31", "reportedDate": "2021-08-20", "reportedEPS": "5.25",
          "estimatedEPS": "4.58", "surprise": "0.67", "surprisePercentage": "14.6288"}


def features(index):
    block = json.loads((FIXTURES / "features" / "NOVA-2021-Q4.json").read_text())[0]
    return parse_feature_record({**block, "utterance_index": index})


def test_catalog_covers_every_role_and_flags_data_agents():
    catalog = load_catalog()
    assert set(catalog) == set(AgentRole)
    for role, spec in catalog.items():
        assert spec.needs_external_data == (role in (AgentRole.ANALYST, AgentRole.PSYCHOLOGIST))
        assert spec.init_prompt


def test_catalog_override(tmp_path):
    p = tmp_path / "editor.txt"
    p.write_text("You are a strict editor.\n")
    catalog = load_catalog({AgentRole.EDITOR: p})
    assert catalog[AgentRole.EDITOR].init_prompt == "You are a strict editor."
    assert catalog[AgentRole.WRITER].init_prompt == read_prompt("writer.txt")


def _trace(n_extra=0):
    tr = ConversationTrace("X").append(AgentRole.CLIENT, MessageKind.TASK_BRIEF, "Write a report.")
    if n_extra:
        tr = tr.append(AgentRole.WRITER, MessageKind.DRAFT, "Draft one.")
        tr = tr.append(AgentRole.EDITOR, MessageKind.FEEDBACK, "Be brief.")
    return tr


def test_editor_turn_with_three_messages():
    spec = load_catalog()[AgentRole.EDITOR]
    request = build_agent_turn(spec, _trace(2))
    assert request.system_prompt == spec.init_prompt
    assert [(m.role, m.text) for m in request.messages] == [
        (ChatRole.USER, "CLIENT: Write a report."),
        (ChatRole.USER, "WRITER: Draft one."),
        (ChatRole.ASSISTANT, "EDITOR: Be brief."),
    ]


def test_writer_turn_on_brief_only():
    request = build_agent_turn(load_catalog()[AgentRole.WRITER], _trace())
    assert len(request.messages) == 1
    assert request.messages[0].role is ChatRole.USER
    assert request.messages[0].text == "CLIENT: Write a report."


def test_analyst_extras_come_last(nova):
    extras = analyst_context(nova, EarningsRecord.from_payload(SAMPLE))
    request = build_agent_turn(load_catalog()[AgentRole.ANALYST], _trace(2), extras)
    last = request.messages[-1]
    assert last.role is ChatRole.USER
    assert last.text.startswith(read_prompt("analyst_data.txt"))
    assert last.text.startswith("Based on your expert analysis")


def test_analyst_context_contains_sample_values(nova):
    text = analyst_context(nova, EarningsRecord.from_payload(SAMPLE))
    for literal in ('"reportedEPS": "5.25"', '"estimatedEPS": "4.58"', '"surprise": "0.67"',
                    '"surprisePercentage": "14.6288"'):
        assert literal in text
    assert "previous quarter" in text
    assert "the the companys'" in text


def test_analyst_context_rejects_wrong_quarter(nova):
    two_back = dict(SAMPLE, fiscalDateEnding="2021-04-30", reportedDate="2021-05-20")
    with pytest.raises(QuarterMismatch):
        analyst_context(nova, EarningsRecord.from_payload(two_back))


def test_psychologist_context_contains_sample_values(nova):
    text = psychologist_context(nova, [features(6)])
    assert "143.7376593336546" in text
    assert "10.84568288161106" in text
    assert "Utterance 6 (Dana Whitfield, Chief Executive Officer)" in text


def test_psychologist_context_without_records(nova):
    assert psychologist_context(nova, []) == read_prompt("psychologist_data.txt")


@pytest.mark.parametrize("index, reason", [(999, "out of range"), (5, "not a management"), (1, "outside the Q&A")])
def test_orphan_feature(nova, index, reason):
    with pytest.raises(OrphanFeature, match=reason):
        psychologist_context(nova, [features(index)])


def test_psychologist_context_max_records(nova):
    text = psychologist_context(nova, [features(8), features(6), features(11)], max_records=2)
    assert "Utterance 6 " in text and "Utterance 8 " in text and "Utterance 11 " not in text


def test_task_brief_embeds_transcript(nova):
    brief = make_task_brief(nova)
    assert "NOVA" in brief.text and "Q4 2021" in brief.text
    assert render_transcript(nova) in brief.text
    assert brief.audience == "Investor"


def test_task_brief_braces_in_transcript_are_not_expanded(nova):
    brief = make_task_brief(nova, template="{transcript}|{audience}", audience="{transcript}")
    assert brief.text.endswith("|{transcript}")


@pytest.mark.parametrize("reply, expected", [
    ("TERMINATE", True),
    ("The report looks complete. TERMINATE", True),
    ('"TERMINATE"', True),
    ("TERMINATE.", True),
    ("Looks good!\n\nTERMINATE\n", True),
    ("Please terminate the section on risk.", False),
    ("Do not TERMINATE yet, add risks.", False),
    ("PRETERMINATE", False),
    ("", False),
])
def test_is_termination(reply, expected):
    assert is_termination(reply) is expected


@given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=40))
def test_termination_needs_the_token_at_the_end(prefix):
    assert is_termination(prefix + " TERMINATE")
    assert not is_termination(prefix + " TERMINATE and more")


def test_agent_spec_rejects_empty_prompt():
    with pytest.raises(ValueError, match="empty"):
        AgentSpec(AgentRole.WRITER, "  \n")
