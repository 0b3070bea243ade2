from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def reference_tables_path() -> Path:
    return FIXTURES / "reference_tables.csv"


@pytest.fixture(scope="session")
def example_tree_path() -> Path:
    return FIXTURES / "example.tree.json"
