import os

# keep matrix primitives single-threaded so runs are bitwise reproducible
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np
import pytest

from ctmneg.corpus import Vocabulary, to_bow


def pytest_terminal_summary(terminalreporter):
    """Print one PASS/FAIL line per acceptance criterion after every run
    that executed the acceptance gate."""
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture
def tiny_vocab():
    return Vocabulary(words=list("abcdefgh"))


@pytest.fixture
def tiny_bows(tiny_vocab):
    rng = np.random.default_rng(7)
    docs = [list(rng.choice(list("abcdefgh"), size=6)) for _ in range(10)]
    return docs, [to_bow(d, tiny_vocab) for d in docs]
