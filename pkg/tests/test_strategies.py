import json

import pytest

from conftest import make_instance, make_poi
from tripeval.llm import MockPlannerClient, ScriptedChatClient
from tripeval.model import Trajectory
from tripeval.strategies import (
    Compression,
    StrategyConfig,
    StrategyFailure,
    StrategyKind,
    generate_plan,
)


def plan_reply(names=("A", "B")):
    entries = [
        {"POI name": n, "Start visit time": f"{9 + 2 * i:02d}:00", "End visit time": f"{10 + 2 * i:02d}:00"}
        for i, n in enumerate(names)
    ]
    return json.dumps({"Day 1": entries})


def eight_traj_instance():
    pois = [make_poi(f"Spot {k}") for k in range(10)]
    trajectories = [Trajectory(((f"Spot {k}", f"Spot {(k + 1) % 10}"),)) for k in range(8)]
    return make_instance(pois, trajectories=trajectories)


# ---------------------------------------------------------------------------
# configs


def test_config_invariants():
    with pytest.raises(ValueError):
        StrategyConfig(StrategyKind.RAG)  # missing m
    with pytest.raises(ValueError):
        StrategyConfig(StrategyKind.RAG, m=0)
    with pytest.raises(ValueError):
        StrategyConfig(StrategyKind.DIRECT, compression=Compression.EXTRACTIVE)
    assert StrategyConfig(StrategyKind.RAG, m=4).label() == "rag(m=4)"
    assert StrategyConfig(StrategyKind.RAG, m=1, compression=Compression.ABSTRACTIVE).label() == "rag+abst"


# ---------------------------------------------------------------------------
# call-count contracts with scripted clients


def test_direct_is_one_call_and_returns_scripted_plan():
    instance = eight_traj_instance()
    client = ScriptedChatClient([plan_reply(("Spot 1", "Spot 2"))])
    plan = generate_plan(instance, StrategyConfig(StrategyKind.DIRECT), client)
    assert plan.poi_names() == ["Spot 1", "Spot 2"]
    assert client.calls == 1


def test_cot_is_one_call():
    client = ScriptedChatClient([plan_reply()])
    generate_plan(eight_traj_instance(), StrategyConfig(StrategyKind.COT), client)
    assert client.calls == 1


def test_reflexion_is_three_calls_and_threads_feedback():
    instance = eight_traj_instance()
    client = ScriptedChatClient(
        [plan_reply(("Spot 1",)), "move Spot 1 later", plan_reply(("Spot 2",))]
    )
    plan = generate_plan(instance, StrategyConfig(StrategyKind.REFLEXION), client)
    assert plan.poi_names() == ["Spot 2"]
    assert client.calls == 3
    refinement_prompt = client.requests[2].messages[-1]["content"]
    assert "move Spot 1 later" in refinement_prompt
    assert '"Spot 1"' in refinement_prompt  # the serialized initial plan is threaded through


def test_mac_is_two_plus_subproblem_calls():
    decomposition = json.dumps(
        {
            "Sub-problem 1": {"Sub-problem description": "pick", "Planning requirements": ["r"]},
            "Sub-problem 2": {"Sub-problem description": "time", "Planning requirements": ["r"]},
            "Sub-problem 3": {"Sub-problem description": "order", "Planning requirements": ["r"]},
        }
    )
    client = ScriptedChatClient([decomposition, "out1", "out2", "out3", plan_reply()])
    generate_plan(eight_traj_instance(), StrategyConfig(StrategyKind.MAC), client)
    assert client.calls == 5  # 2 + 3 sub-problems


def test_mac_truncates_executor_output_to_500_chars():
    decomposition = json.dumps(
        {
            "Sub-problem 1": {"Sub-problem description": "pick", "Planning requirements": ["r"]},
            "Sub-problem 2": {"Sub-problem description": "time", "Planning requirements": ["r"]},
        }
    )
    long_reply = "x" * 2000
    client = ScriptedChatClient([decomposition, long_reply, "short", plan_reply()])
    generate_plan(eight_traj_instance(), StrategyConfig(StrategyKind.MAC), client)
    second_executor_prompt = client.requests[2].messages[-1]["content"]
    assert "x" * 500 in second_executor_prompt
    assert "x" * 501 not in second_executor_prompt


def test_mac_caps_subproblems_at_four():
    decomposition = json.dumps(
        {f"Sub-problem {k}": {"Sub-problem description": "d", "Planning requirements": []} for k in range(1, 7)}
    )
    client = ScriptedChatClient([decomposition, "a", "b", "c", "d", plan_reply()])
    generate_plan(eight_traj_instance(), StrategyConfig(StrategyKind.MAC), client)
    assert client.calls == 6  # decomposition + 4 executors + summary


def test_mad_is_six_calls_with_fixed_critic_order():
    client = ScriptedChatClient(
        [plan_reply(), "sp", "te", "se", "re", plan_reply(("Spot 3",))]
    )
    plan = generate_plan(eight_traj_instance(), StrategyConfig(StrategyKind.MAD), client)
    assert plan.poi_names() == ["Spot 3"]
    assert client.calls == 6
    refinement = client.requests[5].messages[-1]["content"]
    assert refinement.index("Spatial perspective: sp") < refinement.index("Temporal perspective: te")
    assert refinement.index("Temporal perspective: te") < refinement.index("Semantic perspective: se")
    assert refinement.index("Semantic perspective: se") < refinement.index("Relevance perspective: re")


def test_rag_is_one_call_with_exactly_m_trajectories():
    instance = eight_traj_instance()
    client = ScriptedChatClient([plan_reply()])
    generate_plan(instance, StrategyConfig(StrategyKind.RAG, m=4), client)
    assert client.calls == 1
    prompt = client.requests[0].messages[-1]["content"]
    for k in range(1, 5):
        assert f"Trajectory {k}:" in prompt
    assert "Trajectory 5:" not in prompt


def test_rag_requires_enough_trajectories():
    instance = make_instance([make_poi("A")], trajectories=[Trajectory((("A",),))])
    with pytest.raises(ValueError):
        generate_plan(instance, StrategyConfig(StrategyKind.RAG, m=2), ScriptedChatClient([]))


def test_extractive_selection_controls_downstream_prompt():
    instance = eight_traj_instance()
    selection = json.dumps({"Explanation": "best", "Extractive IDs": ["2", "5"]})
    client = ScriptedChatClient([selection, plan_reply()])
    generate_plan(
        instance,
        StrategyConfig(StrategyKind.RAG, m=2, compression=Compression.EXTRACTIVE),
        client,
    )
    assert client.calls == 2
    rag_prompt = client.requests[1].messages[-1]["content"]
    # Trajectory k starts at Spot k-1 in this fixture.
    assert "Trajectory 1: Day 1: Spot 1 -> Spot 2" in rag_prompt
    assert "Trajectory 2: Day 1: Spot 4 -> Spot 5" in rag_prompt
    assert "Trajectory 3:" not in rag_prompt


def test_abstractive_merges_into_single_trajectory():
    instance = eight_traj_instance()
    merged = json.dumps(
        {
            "Explanation": "joined",
            "Results": {"Day 1": [{"POI name": "Spot 7", "Remark": "early"}, {"POI name": "Spot 2", "Remark": ""}]},
        }
    )
    client = ScriptedChatClient([merged, plan_reply()])
    generate_plan(
        instance,
        StrategyConfig(StrategyKind.RAG, m=1, compression=Compression.ABSTRACTIVE),
        client,
    )
    assert client.calls == 2
    rag_prompt = client.requests[1].messages[-1]["content"]
    assert "Trajectory 1: Day 1: Spot 7 -> Spot 2" in rag_prompt
    assert "note on Spot 7: early" in rag_prompt
    assert "Trajectory 2:" not in rag_prompt


# ---------------------------------------------------------------------------
# retries and failure


def test_plan_parse_failure_triggers_regeneration():
    client = ScriptedChatClient(["not json", "still prose", plan_reply()])
    plan = generate_plan(eight_traj_instance(), StrategyConfig(StrategyKind.DIRECT), client)
    assert plan.poi_names() == ["A", "B"]
    assert client.calls == 3


def test_plan_parse_failure_exhausts_and_raises():
    client = ScriptedChatClient(["nope"] * 5)
    with pytest.raises(StrategyFailure):
        generate_plan(eight_traj_instance(), StrategyConfig(StrategyKind.DIRECT), client)
    assert client.calls == 5


def test_generate_plan_is_deterministic_with_mock_client():
    instance = eight_traj_instance()
    config = StrategyConfig(StrategyKind.RAG, m=4)
    a = generate_plan(instance, config, MockPlannerClient(seed=1))
    b = generate_plan(instance, config, MockPlannerClient(seed=1))
    assert a == b


def test_every_strategy_runs_against_the_mock_planner():
    instance = eight_traj_instance()
    configs = [
        StrategyConfig(StrategyKind.DIRECT),
        StrategyConfig(StrategyKind.COT),
        StrategyConfig(StrategyKind.REFLEXION),
        StrategyConfig(StrategyKind.MAC),
        StrategyConfig(StrategyKind.MAD),
        StrategyConfig(StrategyKind.RAG, m=8),
        StrategyConfig(StrategyKind.RAG, m=2, compression=Compression.EXTRACTIVE),
        StrategyConfig(StrategyKind.RAG, m=1, compression=Compression.ABSTRACTIVE),
    ]
    for config in configs:
        plan = generate_plan(instance, config, MockPlannerClient(seed=0))
        assert plan.n_entries > 0, config
        for name in plan.poi_names():
            assert instance.poi(name) is not None, config
