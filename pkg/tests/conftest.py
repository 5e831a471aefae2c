import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synsrl.treebank import DependencyTree, LabeledSpan, PredicateFrame, Sentence  # noqa: E402

FIG1_CONLLX = """\
1\tMs.\t_\t_\t_\t_\t2\tnn\t_\t_
2\tHaag\t_\t_\t_\t_\t3\tnsubj\t_\t_
3\tplays\t_\t_\t_\t_\t0\troot\t_\t_
4\tElianti\t_\t_\t_\t_\t3\tdobj\t_\t_
5\t.\t_\t_\t_\t_\t3\tpunct\t_\t_
"""

FIG1_PROPS = """\
-     (A0*
-     *)
play  (V*)
-     (A1*)
-     *
"""


@pytest.fixture
def fig1_sentence():
    return Sentence(["Ms.", "Haag", "plays", "Elianti", "."])


@pytest.fixture
def fig1_tree():
    return DependencyTree([2, 3, 0, 3, 3], ["nn", "nsubj", "root", "dobj", "punct"])


@pytest.fixture
def fig1_frame():
    return PredicateFrame(3, (LabeledSpan(1, 2, "A0"), LabeledSpan(4, 4, "A1")))


# small dimensions that keep the numpy tape fast enough for full training runs
TINY = dict(word_dim=16, prd_dim=8, label_dim=8, tpf_dim=8, pattern_dim=8,
            tree_hidden=8, hidden=16)


def tiny_config(syntax="none", **overrides):
    from synsrl.model import ModelConfig

    return ModelConfig(**{**TINY, "syntax": syntax, **overrides})
