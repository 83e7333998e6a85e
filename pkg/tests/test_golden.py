import pytest

from goldens import all_goldens, check

GOLDENS = all_goldens()


def test_corpus_is_large_enough():
    assert len(GOLDENS) >= 30


@pytest.mark.parametrize("g", GOLDENS, ids=[g.name for g in GOLDENS])
def test_golden(g):
    assert check(g) == []
