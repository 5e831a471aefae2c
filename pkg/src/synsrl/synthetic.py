"""Small generated corpora with dependency trees and gold frames.

``clause_corpus`` gives SVO sentences with multi-token arguments for
overfitting checks.  ``scrambled_corpus`` interleaves two clauses in random
surface order so that only the tree tells which nouns belong to which verb:
the subject (nsubj) of a verb is its A0 and the object (dobj) its A1.
"""
from __future__ import annotations

import numpy as np

from .model import Example
from .treebank import DependencyTree, LabeledSpan, PredicateFrame, Sentence

NOUNS = ("dog", "cat", "man", "woman", "bird", "child", "farmer", "teacher",
         "doctor", "horse", "king", "girl", "boy", "pilot", "chef", "judge")
VERBS = ("sees", "likes", "chases", "helps", "finds", "calls", "knows", "meets")
ADJS = ("old", "big", "small", "red", "quiet")
PLACES = ("park", "house", "city", "garden")


class _Builder:
    def __init__(self):
        self.tokens: list[str] = []
        self.heads: list[int] = []
        self.labels: list[str] = []

    def add(self, word: str, head: int, label: str) -> int:
        self.tokens.append(word)
        self.heads.append(head)
        self.labels.append(label)
        return len(self.tokens)


def _noun_phrase(b: _Builder, rng, head_of_np: int | None, label: str) -> tuple[int, int, int]:
    """Append [det] [adj] noun; returns (start, end, noun index). Heads patched later."""
    start = len(b.tokens) + 1
    mods = []
    mods.append(("the", "det"))
    if rng.random() < 0.4:
        mods.append((str(rng.choice(ADJS)), "amod"))
    noun_pos = start + len(mods)
    for word, lab in mods:
        b.add(word, noun_pos, lab)
    b.add(str(rng.choice(NOUNS)), head_of_np or 0, label)
    return start, noun_pos, noun_pos


def clause_corpus(n_sentences: int, seed: int = 0) -> list[Example]:
    """``the (adj) N V the (adj) N [in the PLACE] .`` with A0, A1, AM-LOC."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_sentences):
        b = _Builder()
        s0, e0, subj = _noun_phrase(b, rng, None, "nsubj")
        verb = b.add(str(rng.choice(VERBS)), 0, "root")
        b.heads[subj - 1] = verb
        s1, e1, obj = _noun_phrase(b, rng, verb, "dobj")
        spans = [LabeledSpan(s0, e0, "A0"), LabeledSpan(s1, e1, "A1")]
        if rng.random() < 0.5:
            prep = b.add("in", verb, "prep")
            start = prep
            _, end, pobj = _noun_phrase(b, rng, prep, "pobj")
            spans.append(LabeledSpan(start, end, "AM-LOC"))
        b.add(".", verb, "punct")
        out.append(Example(Sentence(b.tokens), DependencyTree(b.heads, b.labels),
                           [PredicateFrame(verb, tuple(spans))]))
    return out


def scrambled_corpus(n_sentences: int, seed: int = 0) -> list[Example]:
    """Two clauses, six single-word tokens, random order; roles follow the arcs.

    The first verb is the root; the second attaches to it as ``ccomp``.
    Within each clause the subject precedes the object in surface order.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_sentences):
        # slots: v1, s1, o1, v2, s2, o2
        words = [str(rng.choice(VERBS)), str(rng.choice(NOUNS)), str(rng.choice(NOUNS)),
                 str(rng.choice(VERBS)), str(rng.choice(NOUNS)), str(rng.choice(NOUNS))]
        pos = list(rng.permutation(6))
        for s, o in ((1, 2), (4, 5)):
            if pos[s] > pos[o]:
                pos[s], pos[o] = pos[o], pos[s]
        at = {slot: pos[slot] + 1 for slot in range(6)}
        head_slot = {0: None, 1: 0, 2: 0, 3: 0, 4: 3, 5: 3}
        label_slot = {0: "root", 1: "nsubj", 2: "dobj", 3: "ccomp", 4: "nsubj", 5: "dobj"}
        tokens, heads, labels = [""] * 6, [0] * 6, [""] * 6
        for slot in range(6):
            i = at[slot] - 1
            tokens[i] = words[slot]
            heads[i] = 0 if head_slot[slot] is None else at[head_slot[slot]]
            labels[i] = label_slot[slot]
        frames = [
            PredicateFrame(at[0], (LabeledSpan(at[1], at[1], "A0"), LabeledSpan(at[2], at[2], "A1"))),
            PredicateFrame(at[3], (LabeledSpan(at[4], at[4], "A0"), LabeledSpan(at[5], at[5], "A1"))),
        ]
        out.append(Example(Sentence(tokens), DependencyTree(heads, labels), frames))
    return out


def random_tree(rng: np.random.Generator, n: int, labels=("nsubj", "dobj", "amod", "det", "prep")
                ) -> DependencyTree:
    """Uniformly shuffled random recursive tree over n tokens."""
    order = list(rng.permutation(n) + 1)
    heads = [0] * n
    lab = [""] * n
    lab[order[0] - 1] = "root"
    for k in range(1, n):
        parent = order[int(rng.integers(0, k))]
        heads[order[k] - 1] = parent
        lab[order[k] - 1] = str(rng.choice(labels))
    return DependencyTree(heads, lab)


def random_frame(rng: np.random.Generator, n: int, roles=("A0", "A1", "A2", "AM-TMP")
                 ) -> PredicateFrame:
    """Random non-overlapping spans avoiding the predicate token."""
    p = int(rng.integers(1, n + 1))
    spans = []
    i = 1
    while i <= n:
        if i != p and rng.random() < 0.4:
            end = i
            while end + 1 <= n and end + 1 != p and rng.random() < 0.5:
                end += 1
            spans.append(LabeledSpan(i, end, str(rng.choice(roles))))
            i = end + 1
        else:
            i += 1
    return PredicateFrame(p, tuple(spans))
