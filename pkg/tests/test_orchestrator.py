import datetime as dt

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ecreport.agents import make_task_brief
from ecreport.external import Fixture, fetch_quarterly_earnings, load_acoustic_features, previous_quarter_record
from ecreport.gateway import (
    ChatResponse,
    RecordingBackend,
    RetryPolicy,
    ScriptedBackend,
    TransportError,
    estimate_tokens,
    record_replay,
)
from ecreport.model import AgentRole, MessageKind, TerminatedBy
from ecreport.orchestrator import (
    ELISION_MARKER,
    EmptyDraft,
    GatewayFailure,
    MissingExternalData,
    Orchestrator,
    Phase,
    RevisionMode,
    RunConfig,
    expected_message_count,
    run_generation,
)

from conftest import FIXTURES
from helpers import RoleBackend, never_terminate, terminate_at

ED = AgentRole.EDITOR
AN = AgentRole.ANALYST
PS = AgentRole.PSYCHOLOGIST


@pytest.fixture
def full_brief(nova):
    records = fetch_quarterly_earnings("NOVA", Fixture(FIXTURES / "earnings"))
    return make_task_brief(
        nova,
        earnings=previous_quarter_record(records, nova.fiscal_quarter),
        features=load_acoustic_features(FIXTURES / "features" / "NOVA-2021-Q4.json"),
    )


def kinds(trace):
    return [(m.sender, m.kind) for m in trace.messages]


def test_editor_only_terminating_in_round_one(nova):
    backend = ScriptedBackend(["Draft v1.", "Tighten the opening.", "Draft v2.", "TERMINATE"])
    report, trace = run_generation(make_task_brief(nova), RunConfig(feedback_roles=(ED,)), backend)
    assert kinds(trace) == [
        (AgentRole.CLIENT, MessageKind.TASK_BRIEF),
        (AgentRole.WRITER, MessageKind.DRAFT),
        (ED, MessageKind.FEEDBACK),
        (AgentRole.WRITER, MessageKind.DRAFT),
        (AgentRole.CLIENT, MessageKind.TERMINATION),
    ]
    assert report.text == "Draft v2."
    assert trace.rounds_used == 1
    assert trace.terminated_by is TerminatedBy.CLIENT_TERMINATE
    assert backend.remaining == 0


def test_round_cap_of_two(nova):
    backend = RoleBackend(never_terminate)
    report, trace = run_generation(make_task_brief(nova), RunConfig(feedback_roles=(ED,), round_cap=2), backend)
    assert trace.rounds_used == 2
    assert trace.terminated_by is TerminatedBy.ROUND_CAP
    assert backend.calls[AgentRole.CLIENT] == 2
    assert report.text == "Draft 3: revenue rose and guidance was kept."
    assert trace.messages[-1].kind is MessageKind.FEEDBACK


def test_no_feedback_roles_gives_three_messages(nova):
    backend = ScriptedBackend(["Only draft.", "TERMINATE"])
    report, trace = run_generation(make_task_brief(nova), RunConfig(feedback_roles=()), backend)
    assert len(trace.messages) == 3
    assert report.text == "Only draft."
    assert expected_message_count(RunConfig(feedback_roles=()), 1) == 3


def test_no_feedback_roles_revises_on_client_comments(nova):
    backend = RoleBackend(terminate_at(2))
    _, trace = run_generation(make_task_brief(nova), RunConfig(feedback_roles=()), backend)
    assert [m.sender for m in trace.messages] == [
        AgentRole.CLIENT, AgentRole.WRITER, AgentRole.CLIENT, AgentRole.WRITER, AgentRole.CLIENT,
    ]


def test_per_agent_revises_after_each_feedback(full_brief):
    backend = RoleBackend(terminate_at(1))
    config = RunConfig(revision_mode=RevisionMode.PER_AGENT)
    _, trace = run_generation(full_brief, config, backend)
    senders = [m.sender for m in trace.messages]
    assert senders == [
        AgentRole.CLIENT, AgentRole.WRITER,
        AN, AgentRole.WRITER, PS, AgentRole.WRITER, ED, AgentRole.WRITER,
        AgentRole.CLIENT,
    ]
    assert len(trace.messages) == expected_message_count(config, 1)


def test_feedback_order_follows_config(full_brief):
    backend = RoleBackend(terminate_at(1))
    _, trace = run_generation(full_brief, RunConfig(feedback_roles=(ED, AN)), backend)
    assert [m.sender for m in trace.messages if m.kind is MessageKind.FEEDBACK] == [ED, AN]


def test_analyst_sees_earnings_and_psychologist_sees_features(full_brief):
    backend = RoleBackend(terminate_at(1))
    run_generation(full_brief, RunConfig(), backend)
    by_role = {backend.by_prompt[r.system_prompt]: r for r in backend.requests}
    assert '"reportedEPS": "5.25"' in by_role[AN].messages[-1].text
    assert "10.84568288161106" in by_role[PS].messages[-1].text
    assert "reportedEPS" not in by_role[ED].messages[-1].text


def test_gateway_failure_keeps_partial_trace(nova):
    class Failing:
        calls = 0

        def send(self, request):
            self.calls += 1
            if self.calls == 2:
                raise TransportError("connection reset")
            return ChatResponse("Draft v1.")

    with pytest.raises(GatewayFailure) as err:
        run_generation(make_task_brief(nova), RunConfig(feedback_roles=(ED,)), Failing(),
                       retry=RetryPolicy(retries=0))
    assert len(err.value.trace.messages) == 2
    assert err.value.trace.messages[-1].kind is MessageKind.DRAFT


def test_empty_draft(nova):
    with pytest.raises(EmptyDraft) as err:
        run_generation(make_task_brief(nova), RunConfig(feedback_roles=(ED,)), ScriptedBackend(["  \n"]))
    assert len(err.value.trace.messages) == 1


def test_analyst_without_earnings(nova):
    with pytest.raises(MissingExternalData):
        run_generation(make_task_brief(nova), RunConfig(), RoleBackend())


def test_psychologist_without_features_still_runs(nova):
    backend = RoleBackend(terminate_at(1))
    _, trace = run_generation(make_task_brief(nova), RunConfig(feedback_roles=(PS,)), backend)
    assert trace.terminated_by is TerminatedBy.CLIENT_TERMINATE


def test_context_budget_elides_old_messages_but_keeps_brief_and_latest_draft(nova):
    backend = RoleBackend(never_terminate)
    brief = make_task_brief(nova)
    budget = estimate_tokens(brief.text) + 40
    config = RunConfig(feedback_roles=(ED,), round_cap=4, context_token_budget=budget)
    _, trace = run_generation(brief, config, backend)
    last = backend.requests[-1]
    texts = [m.text for m in last.messages]
    assert texts[0].endswith(brief.text)
    assert any(t.endswith(ELISION_MARKER) for t in texts)
    assert texts[-1] != ELISION_MARKER
    # The stored trace is never elided.
    assert ELISION_MARKER not in {m.text for m in trace.messages}


def test_replay_reproduces_trace(full_brief):
    recorder = RecordingBackend(RoleBackend(terminate_at(2)))
    stamp = dt.datetime(2023, 11, 14, tzinfo=dt.timezone.utc)
    _, first = run_generation(full_brief, RunConfig(), recorder, generated_at=stamp)
    _, second = run_generation(full_brief, RunConfig(), record_replay(recorder.session, strict=True),
                               generated_at=stamp)
    assert first == second


def test_no_calls_after_done(nova):
    backend = ScriptedBackend(["Draft.", "Note.", "Draft 2.", "TERMINATE", "unused"])
    orch = Orchestrator(make_task_brief(nova), RunConfig(feedback_roles=(ED,)), backend)
    orch.run()
    assert backend.remaining == 1


def test_state_machine_phases(nova):
    backend = ScriptedBackend(["Draft.", "Note.", "Draft 2.", "TERMINATE"])
    orch = Orchestrator(make_task_brief(nova), RunConfig(feedback_roles=(ED,)), backend)
    state = orch.initial_state()
    phases = [state.phase]
    while state.phase is not Phase.DONE:
        state = orch.step(state)
        phases.append(state.phase)
    assert phases == [Phase.DRAFTING, Phase.FEEDBACK, Phase.REVISING, Phase.CLIENT_REVIEW, Phase.DONE]


@pytest.mark.parametrize("kwargs", [
    {"feedback_roles": (ED, ED)},
    {"feedback_roles": (AgentRole.WRITER,)},
    {"round_cap": 0},
])
def test_run_config_validation(kwargs):
    with pytest.raises(ValueError):
        RunConfig(**kwargs)


# The brief is immutable, so sharing it across examples is safe.
@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(
    roles=st.lists(st.sampled_from([AN, PS, ED]), unique=True),
    mode=st.sampled_from(list(RevisionMode)),
    cap=st.integers(1, 5),
    stop=st.integers(1, 7),
)
def test_message_count_matches_formula(full_brief, roles, mode, cap, stop):
    config = RunConfig(feedback_roles=tuple(roles), revision_mode=mode, round_cap=cap)
    _, trace = run_generation(full_brief, config, RoleBackend(terminate_at(stop)))
    assert trace.rounds_used == min(cap, stop)
    assert len(trace.messages) == expected_message_count(config, trace.rounds_used)
    assert trace.messages[0].kind is MessageKind.TASK_BRIEF
