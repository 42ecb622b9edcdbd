"""Release gate: overfit the engine's exported file, unmodified, with a
preset small enough for a laptop CPU, and hit the loss and accuracy
bars within the time budget."""
import time

from trihop_trainer import (
    LABEL_WORDS,
    TrainerConfig,
    load_checkpoint,
    load_training_set,
    split_examples,
    train,
)

TIME_BUDGET_SECONDS = 600


def test_trainer_smoke(train_file, tmp_path):
    started = time.perf_counter()

    examples = load_training_set(train_file)
    assert len(examples) >= 50
    assert len({e.instance_id for e in examples}) == 20

    config = TrainerConfig(
        output_dir=str(tmp_path / "ckpt"),
        model_name="tiny-gru",
        epochs=15,
        batch_size=8,
        learning_rate=3e-3,
        eval_fraction=0.1,
        seed=13,
    )
    result = train(config, examples)

    first, last = result.train_losses[0], result.train_losses[-1]
    assert last <= 0.5 * first, (first, last)

    predictor = load_checkpoint(result.checkpoint_dir)
    train_set, _ = split_examples(examples, config.eval_fraction, config.seed)
    hits = 0
    for example in train_set:
        generated = predictor.generate(example.input)
        assert generated in LABEL_WORDS, generated
        hits += generated == example.target_label
    accuracy = hits / len(train_set)
    assert accuracy >= 0.9, f"train accuracy {accuracy:.2%} on {len(train_set)} records"

    elapsed = time.perf_counter() - started
    assert elapsed <= TIME_BUDGET_SECONDS, f"took {elapsed:.0f}s"
