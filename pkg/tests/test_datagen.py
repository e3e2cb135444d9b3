import json

import pytest

from sokopoints.datagen import (
    CotCandidate,
    DatasetSchemaError,
    DemonstrationRecord,
    GPDemoConfig,
    SokobanDemoConfig,
    filter_cot,
    gen_gp_demos,
    gen_sokoban_demos,
    group_by_puzzle,
    load_dataset,
    manifest_path,
    persist_dataset,
)
from sokopoints.points import GPInstance, score_gp_answer
from sokopoints.prompts import parse_sokoban_prompt
from sokopoints.responses import parse_response
from sokopoints.sokoban import step
from sokopoints.variants import SokobanVariant, decode_action


def replay_group(records):
    state, _ = parse_sokoban_prompt(records[0].prompt)
    for r in records:
        s, tokens = parse_sokoban_prompt(r.prompt)
        assert s.boxes == state.boxes and s.player == state.player
        action = decode_action(parse_response(r.response).answer_text, SokobanVariant("x", tokens))
        assert action.value == r.extra["expert_action"]
        state = step(state, action).next_state
    return state.solved


def test_sokoban_pair_count_and_replay():
    records = list(gen_sokoban_demos(SokobanDemoConfig(num_pairs=150), seed=1))
    assert len(records) == 150
    groups = group_by_puzzle(records)
    assert all(replay_group(g) for g in groups.values())
    assert {r.response for r in records} <= {f"<think> </think> <answer> {t} </answer>" for t in ("Up", "Down", "Left", "Right")}


def test_diverse_sokoban_uses_word_vocabularies():
    records = list(gen_sokoban_demos(SokobanDemoConfig(num_pairs=60, diverse=True), seed=2))
    assert len(records) == 60
    assert all(r.variant == "diverse" for r in records)
    assert len({tuple(r.extra["tokens"]) for r in records}) > 10
    assert all(replay_group(g) for g in group_by_puzzle(records).values())


def test_gp_records_self_score():
    for diverse in (False, True):
        records = list(gen_gp_demos(GPDemoConfig(count=80, diverse=diverse), seed=3))
        assert len(records) == 80
        for r in records:
            inst = GPInstance.from_dict(r.extra["instance"])
            assert score_gp_answer(r.response, inst).points == 5
        if diverse:
            assert len({r.variant for r in records}) > 1


def test_validation_split_fraction():
    records = list(gen_gp_demos(GPDemoConfig(count=2000, validation_fraction=0.1), seed=4))
    frac = sum(r.split == "validation" for r in records) / len(records)
    assert 0.07 < frac < 0.13


def test_persist_is_byte_identical(tmp_path):
    cfg = SokobanDemoConfig(num_pairs=40)
    m1 = persist_dataset(gen_sokoban_demos(cfg, 9), tmp_path / "a.jsonl", cfg, 9)
    m2 = persist_dataset(gen_sokoban_demos(cfg, 9), tmp_path / "b.jsonl", cfg, 9)
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    assert m1 == m2 and m1.total == 40
    manifest = json.loads(manifest_path(tmp_path / "a.jsonl").read_text())
    assert manifest["sha256"] == m1.sha256
    assert load_dataset(tmp_path / "a.jsonl") == list(gen_sokoban_demos(cfg, 9))


def test_different_seeds_differ(tmp_path):
    a = [r.prompt for r in gen_gp_demos(GPDemoConfig(count=20), 1)]
    b = [r.prompt for r in gen_gp_demos(GPDemoConfig(count=20), 2)]
    assert a != b


def test_load_reports_bad_line(tmp_path):
    good = DemonstrationRecord("p", "r", "gp", "training", 1).to_json()
    path = tmp_path / "d.jsonl"
    path.write_text(good + "\n" + '{"prompt": "p"}\n', encoding="utf-8")
    with pytest.raises(DatasetSchemaError) as e:
        load_dataset(path)
    assert e.value.line == 2
    path.write_text(good + "\nnot json\n", encoding="utf-8")
    with pytest.raises(DatasetSchemaError):
        load_dataset(path)


def test_cot_filter_keeps_only_correct_answers():
    inst = GPInstance.from_dict({"cards": ["3", "3", "8", "8"]})
    ctx = {"instance": inst.to_dict()}
    good = '<think> long reasoning </think> <answer> {"number": [3, 3, 8, 8], "formula": "8/(3-8/3)"} </answer>'
    bad = '<think> guess </think> <answer> {"number": [3, 3, 8, 8], "formula": "3+3+8+8"} </answer>'
    rows = [CotCandidate("p", good, "gp", ctx), CotCandidate("p", bad, "gp", ctx), {"prompt": "p", "response": good}]
    res = filter_cot(rows)
    assert [r.response for r in res.accepted] == [good]
    assert res.accepted[0].response.startswith("<think> long reasoning")
    assert (res.rejected, res.malformed) == (1, 1)


def test_cot_filter_caps_per_prompt():
    ctx = {"expert_action": "Up", "tokens": ["Up", "Down", "Left", "Right"]}
    rows = [CotCandidate("p", f"<think> {i} </think> <answer> Up </answer>", "sokoban", ctx) for i in range(5)]
    rows.append(CotCandidate("q", "<think> </think> <answer> up </answer>", "sokoban", ctx))
    res = filter_cot(rows, k_per_prompt=2)
    assert len(res.accepted) == 3 and res.over_cap == 3
