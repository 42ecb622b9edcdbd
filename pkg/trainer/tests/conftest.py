import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture(scope="session")
def train_file():
    return TESTS_DIR / "fixtures" / "revising_train.jsonl"
