from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixtures import TOY_ENTRIES, copy_bytes_fn, corpus_functions  # noqa: E402

from vulncontext.knowledge import build_knowledge_base  # noqa: E402


@pytest.fixture
def copy_bytes():
    return copy_bytes_fn()


@pytest.fixture(scope="session")
def corpus():
    return corpus_functions()


@pytest.fixture(scope="session")
def toy_index():
    return build_knowledge_base(list(TOY_ENTRIES))
