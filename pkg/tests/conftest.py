import io

import numpy as np
import pytest

from qtagger.corpus import parse_conll, parse_slot_corpus

CONLL_TWO_SENTENCES = """\
John B-PER
Smith I-PER
sleeps O

Mary B-PER
runs O
"""

SLOT_LINES = """\
flights to boston please\tO O B-CITY O
show me fares\tO O B-FARE
"""


@pytest.fixture
def conll_corpus():
    return parse_conll(io.StringIO(CONLL_TWO_SENTENCES))


@pytest.fixture
def slot_corpus():
    return parse_slot_corpus(io.StringIO(SLOT_LINES))


def make_word_corpus(num_sentences=200, seed=0):
    """Synthetic 3-label slot corpus where the word determines the label."""
    rng = np.random.default_rng(seed)
    words = {"O": [f"o{i}" for i in range(12)],
             "B-X": [f"x{i}" for i in range(4)],
             "B-Y": [f"y{i}" for i in range(4)]}
    lines = []
    for _ in range(num_sentences):
        length = int(rng.integers(3, 8))
        toks, labs = [], []
        for _ in range(length):
            u = rng.random()
            lab = "B-X" if u < 0.2 else ("B-Y" if u < 0.35 else "O")
            pool = words[lab]
            toks.append(pool[int(rng.integers(len(pool)))])
            labs.append(lab)
        lines.append(" ".join(toks) + "\t" + " ".join(labs))
    return parse_slot_corpus(io.StringIO("\n".join(lines) + "\n"))


@pytest.fixture(scope="session")
def word_corpus():
    return make_word_corpus()
