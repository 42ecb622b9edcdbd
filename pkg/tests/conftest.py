import sys
from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("local", deadline=None, max_examples=100)
settings.load_profile("local")

TESTS_DIR = Path(__file__).resolve().parent
FIXTURES_DIR = TESTS_DIR / "fixtures"
GOLDEN_DIR = TESTS_DIR / "golden"

sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN_DIR


@pytest.fixture
def e2e_dataset_path() -> Path:
    return FIXTURES_DIR / "e2e_dataset.jsonl"


@pytest.fixture
def e2e_mock_path() -> Path:
    return FIXTURES_DIR / "e2e_mock.jsonl"
