"""Constrained Viterbi decoding over BIO tag lattices.

Tag order is fixed: ``O`` first, then ``B-X, I-X`` for each role X in the
given role order.  Among equally scoring legal sequences the decoder returns
the lexicographically smallest one by tag index; the brute-force oracle
uses the same rule, so both agree exactly on ties.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DecodeError(ValueError):
    pass


def tag_set(roles: Sequence[str]) -> list[str]:
    tags = ["O"]
    for r in roles:
        tags += [f"B-{r}", f"I-{r}"]
    return tags


@dataclass(frozen=True)
class TransitionMask:
    tags: tuple[str, ...]
    allowed: np.ndarray  # allowed[prev, cur]
    start: np.ndarray

    def is_legal(self, seq: Sequence[int]) -> bool:
        if not seq or not self.start[seq[0]]:
            return False
        return all(self.allowed[a, b] for a, b in zip(seq, seq[1:]))


def build_transition_mask(roles: Sequence[str]) -> TransitionMask:
    if not roles:
        raise DecodeError("need at least one role")
    tags = tag_set(roles)
    k = len(tags)
    allowed = np.ones((k, k), dtype=bool)
    start = np.ones(k, dtype=bool)
    for j, cur in enumerate(tags):
        if cur.startswith("I-"):
            start[j] = False
            role = cur[2:]
            for i, prev in enumerate(tags):
                allowed[i, j] = prev in (f"B-{role}", f"I-{role}")
    return TransitionMask(tuple(tags), allowed, start)


def sequence_score(log_dists: np.ndarray, seq: Sequence[int]) -> float:
    """Sum of per-position log-probabilities, accumulated left to right."""
    score = 0.0
    for t, y in enumerate(seq):
        score += float(log_dists[t, y])
    return score


def viterbi(log_dists: np.ndarray, mask: TransitionMask) -> tuple[list[str], float]:
    """Best legal tag sequence and its score.

    The table is filled right to left (best completion from each cell) and
    read off left to right, taking the lowest tag index among ties at every
    position; that yields the lexicographically first optimal sequence.
    """
    scores = np.asarray(log_dists, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] < 1:
        raise DecodeError(f"expected an n x k lattice with n >= 1, got {scores.shape}")
    n, k = scores.shape
    if k != len(mask.tags):
        raise DecodeError(f"lattice has {k} tags, mask has {len(mask.tags)}")
    trans = np.where(mask.allowed, 0.0, -np.inf)
    # best[t, y]: best score of positions t..n-1 given tag y at t
    best = np.empty((n, k))
    best[n - 1] = scores[n - 1]
    for t in range(n - 2, -1, -1):
        best[t] = scores[t] + (trans + best[t + 1][None, :]).max(axis=1)
    first = np.where(mask.start, best[0], -np.inf)
    if not np.isfinite(first.max()):
        raise DecodeError("no legal tag sequence")
    seq = [int(np.argmax(first))]
    for t in range(1, n):
        cand = trans[seq[-1]] + best[t]
        seq.append(int(np.argmax(cand)))
    return [mask.tags[y] for y in seq], sequence_score(scores, seq)


def viterbi_indices(log_dists: np.ndarray, mask: TransitionMask) -> list[int]:
    tags, _ = viterbi(log_dists, mask)
    index = {t: i for i, t in enumerate(mask.tags)}
    return [index[t] for t in tags]


def _all_sequences(k: int, n: int) -> np.ndarray:
    """Every length-n sequence over k tags, in lexicographic order."""
    return np.indices((k,) * n).reshape(n, -1).T


def brute_force_decode(log_dists: np.ndarray, mask: TransitionMask,
                       limit: int = 2_000_000) -> tuple[list[str], float]:
    """Exhaustive argmax over all legal sequences (test oracle).

    Scores are summed left to right exactly as :func:`sequence_score` does;
    the first maximum in lexicographic order wins.
    """
    scores = np.asarray(log_dists, dtype=np.float64)
    n, k = scores.shape
    if k ** n > limit:
        raise DecodeError(f"{k}^{n} sequences exceed the enumeration limit {limit}")
    seqs = _all_sequences(k, n)
    legal = mask.start[seqs[:, 0]].copy()
    total = np.zeros(len(seqs))
    for t in range(n):
        if t:
            legal &= mask.allowed[seqs[:, t - 1], seqs[:, t]]
        total = total + scores[t, seqs[:, t]]
    if not legal.any():
        raise DecodeError("no legal tag sequence")
    total = np.where(legal, total, -np.inf)
    best = int(np.argmax(total))
    seq = seqs[best].tolist()
    return [mask.tags[y] for y in seq], sequence_score(scores, seq)
