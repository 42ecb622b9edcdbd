import json

import pytest

from trihop_trainer import (
    ConfigError,
    SchemaMismatchError,
    load_training_set,
    split_examples,
)

GOOD_HEADER = {"schema": "trihop/finetune/v1", "config": {}}
GOOD_RECORD = {
    "input": 'Given the sentence "fine" What is the sentiment polarity towards it?',
    "target_label": "positive",
    "instance_id": "a1",
    "step": 1,
}


def write_jsonl(path, objects):
    path.write_text("".join(json.dumps(o) + "\n" for o in objects), encoding="utf-8")
    return path


def test_exported_fixture_loads_completely(train_file):
    examples = load_training_set(train_file)
    assert len(examples) == 60
    by_instance = {}
    for example in examples:
        by_instance.setdefault(example.instance_id, []).append(example.step)
        assert example.input.strip()
        assert example.target_label in ("positive", "neutral", "negative")
    assert len(by_instance) == 20
    assert all(sorted(steps) == [1, 2, 3] for steps in by_instance.values())


def test_minimal_file_loads(tmp_path):
    path = write_jsonl(tmp_path / "t.jsonl", [GOOD_HEADER, GOOD_RECORD])
    examples = load_training_set(path)
    assert len(examples) == 1
    assert examples[0].target_label == "positive"
    assert examples[0].step == 1


def mangled(**overrides):
    record = dict(GOOD_RECORD)
    for key, value in overrides.items():
        if value is None:
            record.pop(key, None)
        else:
            record[key] = value
    return record


@pytest.mark.parametrize(
    "record, fragment",
    [
        (mangled(target_label=None), "missing fields: target_label"),
        (mangled(extra="x"), "unknown fields: extra"),
        (mangled(input=""), "input must be a non-empty string"),
        (mangled(input="   "), "input must be a non-empty string"),
        (mangled(target_label="pos"), "target_label"),
        (mangled(target_label=1), "target_label"),
        (mangled(instance_id=""), "instance_id"),
        (mangled(instance_id=7), "instance_id"),
        (mangled(step=4), "step"),
        (mangled(step="1"), "step"),
        (mangled(step=True), "step"),
        ([1, 2], "expected an object"),
    ],
)
def test_bad_records_rejected_with_line(tmp_path, record, fragment):
    path = write_jsonl(tmp_path / "t.jsonl", [GOOD_HEADER, GOOD_RECORD, record])
    with pytest.raises(SchemaMismatchError) as caught:
        load_training_set(path)
    assert fragment in str(caught.value)
    assert f"{path}:3" in str(caught.value)


@pytest.mark.parametrize(
    "first_line, fragment",
    [
        (json.dumps({"schema": "trihop/trace/v1"}), "expected schema"),
        (json.dumps({"config": {}}), "expected schema"),
        (json.dumps(GOOD_RECORD), "expected schema"),
        ("[]", "expected schema"),
        ("{not json", "not valid JSON"),
    ],
)
def test_bad_header_rejected(tmp_path, first_line, fragment):
    path = tmp_path / "t.jsonl"
    path.write_text(first_line + "\n" + json.dumps(GOOD_RECORD) + "\n", encoding="utf-8")
    with pytest.raises(SchemaMismatchError) as caught:
        load_training_set(path)
    assert fragment in str(caught.value)
    assert f"{path}:1" in str(caught.value)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.raises(SchemaMismatchError, match=r":1: empty file"):
        load_training_set(path)


def test_blank_line_rejected(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text(
        json.dumps(GOOD_HEADER) + "\n\n" + json.dumps(GOOD_RECORD) + "\n", encoding="utf-8"
    )
    with pytest.raises(SchemaMismatchError, match=r":2: blank line"):
        load_training_set(path)


def test_broken_record_json_names_its_line(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text(json.dumps(GOOD_HEADER) + "\n{oops\n", encoding="utf-8")
    with pytest.raises(SchemaMismatchError, match=r":2: not valid JSON"):
        load_training_set(path)


def test_split_same_seed_same_split(train_file):
    examples = load_training_set(train_file)
    assert split_examples(examples, 0.2, 7) == split_examples(examples, 0.2, 7)


def test_split_seed_changes_membership(train_file):
    examples = load_training_set(train_file)
    _, held_a = split_examples(examples, 0.2, 7)
    _, held_b = split_examples(examples, 0.2, 8)
    ids = lambda rows: {e.instance_id for e in rows}  # noqa: E731
    assert ids(held_a) != ids(held_b)


def test_split_never_leaks_instances(train_file):
    examples = load_training_set(train_file)
    train_set, held_out = split_examples(examples, 0.25, 3)
    train_ids = {e.instance_id for e in train_set}
    held_ids = {e.instance_id for e in held_out}
    assert not train_ids & held_ids
    assert train_ids | held_ids == {e.instance_id for e in examples}
    assert len(train_set) + len(held_out) == len(examples)
    # all three step-records of one instance stay on one side
    assert all(sum(1 for e in held_out if e.instance_id == i) == 3 for i in held_ids)


def test_split_preserves_record_order(train_file):
    examples = load_training_set(train_file)
    train_set, held_out = split_examples(examples, 0.2, 11)
    positions = {id(e): i for i, e in enumerate(examples)}
    for side in (train_set, held_out):
        indices = [positions[id(e)] for e in side]
        assert indices == sorted(indices)


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1, 1.5])
def test_split_fraction_bounds(train_file, fraction):
    examples = load_training_set(train_file)
    with pytest.raises(ConfigError, match="eval_fraction"):
        split_examples(examples, fraction, 1)


def test_split_needs_two_instances():
    single = [GOOD_RECORD | {"step": s} for s in (1, 2, 3)]
    from trihop_trainer import TrainingExample

    examples = [TrainingExample(**r) for r in single]
    with pytest.raises(ConfigError, match="at least 2 instances"):
        split_examples(examples, 0.5, 1)


def test_split_extreme_fractions_keep_both_sides(train_file):
    examples = load_training_set(train_file)
    train_set, held_out = split_examples(examples, 0.01, 5)
    assert held_out and train_set
    train_set, held_out = split_examples(examples, 0.99, 5)
    assert held_out and train_set
