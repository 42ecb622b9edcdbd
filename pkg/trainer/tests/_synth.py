"""Small learnable corpora for fast training tests."""
from trihop_trainer import TrainingExample

CUES = {
    "positive": ("bright", "joyful", "superb"),
    "neutral": ("plain", "routine", "beige"),
    "negative": ("dreary", "broken", "sour"),
}
LABELS = tuple(CUES)


def synthetic_examples(n=50):
    """n short prompts whose label is recoverable from one cue word."""
    examples = []
    for i in range(n):
        label = LABELS[i % 3]
        cue = CUES[label][(i // 3) % 3]
        examples.append(
            TrainingExample(
                input=f'Given the sentence "a {cue} lamp {i}" '
                      f"What is the sentiment polarity towards the lamp?",
                target_label=label,
                instance_id=f"s{i:03d}",
                step=i % 3 + 1,
            )
        )
    return examples
