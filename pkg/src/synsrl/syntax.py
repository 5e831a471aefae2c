"""Syntax-aware word representations built from a dependency tree.

Four encoders, each giving one vector per (focused word i, predicate p):

* Tree-GRU   -- bidirectional tree GRU over relation labels (predicate-independent)
* SDP        -- max-pooled label embeddings along the two halves of the i-p tree path
* TPF        -- embedding of the (predicate->LCA, word->LCA) distance pair
* PE         -- embedding of a structural pattern plus three relation labels
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics as nx
from .numerics import ParameterStore, Tensor
from .treebank import DependencyTree, lca, path_to_ancestor
from .vocab import Vocab

PATTERNS = (
    "self", "child", "parent", "grandchild", "grandparent",
    "sibling", "descendant", "ancestor", "other",
)

SYNTAX_MODES = ("none", "tree-gru", "sdp", "tpf", "pe")


@dataclass
class LabelEmbeddings:
    """Relation label -> vector; unseen labels share the vocabulary's unknown row."""

    vocab: Vocab
    table: Tensor

    @property
    def dim(self) -> int:
        return self.table.shape[1]

    def ids(self, tree: DependencyTree) -> list[int]:
        return [self.vocab.lookup(lab) for lab in tree.labels]

    def lookup(self, tree: DependencyTree) -> Tensor:
        """Matrix of l_i rows, one per token."""
        return nx.embedding_lookup(self.table, self.ids(tree))

    @classmethod
    def create(cls, store: ParameterStore, vocab: Vocab, dim: int, rng, scale=0.01,
               prefix="syntax.labels"):
        return cls(vocab, store.add(prefix, nx.uniform(rng, (len(vocab), dim), scale)))


@dataclass
class TreeGruParams:
    """Bottom-up and top-down Tree-GRU weights.

    Bottom-up gates act on [l_i ; h_L ; h_R], so ``up_gates`` stacks the W, U and
    V blocks of the five gates (r_L, r_R, z_L, z_R, z) column-wise; ``up_cand``
    does the same for the candidate state.  Top-down is a plain GRU with the
    label as input and the parent state as hidden state.
    """

    up_gates: Tensor   # (d_l + 2h, 5h)
    up_gates_b: Tensor
    up_cand: Tensor    # (d_l + 2h, h)
    up_cand_b: Tensor
    down_gates: Tensor  # (d_l + h, 2h): r, z
    down_gates_b: Tensor
    down_cand: Tensor   # (d_l + h, h)
    down_cand_b: Tensor

    @property
    def hidden(self) -> int:
        return self.up_cand.shape[1]

    @classmethod
    def create(cls, store: ParameterStore, label_dim: int, hidden: int, rng,
               prefix="syntax.treegru"):
        def mat(name, rows, cols):
            return store.add(f"{prefix}.{name}", nx.glorot(rng, rows, cols))

        def bias(name, size):
            return store.add(f"{prefix}.{name}", np.zeros(size))

        h = hidden
        return cls(
            mat("up_gates", label_dim + 2 * h, 5 * h), bias("up_gates_b", 5 * h),
            mat("up_cand", label_dim + 2 * h, h), bias("up_cand_b", h),
            mat("down_gates", label_dim + h, 2 * h), bias("down_gates_b", 2 * h),
            mat("down_cand", label_dim + h, h), bias("down_cand_b", h),
        )

    @classmethod
    def from_store(cls, store: ParameterStore, prefix="syntax.treegru"):
        names = ("up_gates", "up_gates_b", "up_cand", "up_cand_b",
                 "down_gates", "down_gates_b", "down_cand", "down_cand_b")
        return cls(*(store[f"{prefix}.{n}"] for n in names))


@dataclass
class TpfTable:
    clip: int
    table: Tensor  # ((clip + 1) ** 2, dim)

    def index(self, pair: tuple[int, int]) -> int:
        d1, d2 = (min(d, self.clip) for d in pair)
        return d1 * (self.clip + 1) + d2

    @classmethod
    def create(cls, store: ParameterStore, clip: int, dim: int, rng, scale=0.01,
               name="syntax.tpf"):
        return cls(clip, store.add(name, nx.uniform(rng, ((clip + 1) ** 2, dim), scale)))


@dataclass
class PatternInventory:
    names: tuple[str, ...]
    table: Tensor

    def index(self, name: str) -> int:
        return self.names.index(name)

    @classmethod
    def create(cls, store: ParameterStore, dim: int, rng, scale=0.01, names=PATTERNS,
               name="syntax.patterns"):
        return cls(tuple(names), store.add(name, nx.uniform(rng, (len(names), dim), scale)))


# ---------------------------------------------------------------------------
# Tree-GRU


def tree_gru_bottom_up(tree: DependencyTree, label_embs: LabelEmbeddings,
                       params: TreeGruParams, order: list[int] | None = None) -> list[Tensor]:
    """h_up for every token (0-based list), children summed per side."""
    h = params.hidden
    labels = label_embs.lookup(tree)
    zero = Tensor(np.zeros(h))
    states: dict[int, Tensor] = {}
    for i in order or tree.bottom_up_order():
        left = [states[c] for c in tree.children(i) if c < i]
        right = [states[c] for c in tree.children(i) if c > i]
        h_left = _sum(left) if left else zero
        h_right = _sum(right) if right else zero
        l_i = nx.row(labels, i - 1)
        pre = nx.add(nx.matmul(nx.concat([l_i, h_left, h_right]), params.up_gates),
                     params.up_gates_b)
        gates = nx.sigmoid(pre)
        r_left, r_right = nx.cols(gates, 0, h), nx.cols(gates, h, 2 * h)
        z_left, z_right, z_self = (nx.cols(gates, k * h, (k + 1) * h) for k in (2, 3, 4))
        cand_in = nx.concat([l_i, nx.hadamard(r_left, h_left), nx.hadamard(r_right, h_right)])
        cand = nx.tanh(nx.add(nx.matmul(cand_in, params.up_cand), params.up_cand_b))
        states[i] = _sum([nx.hadamard(z_left, h_left), nx.hadamard(z_right, h_right),
                          nx.hadamard(z_self, cand)])
    return [states[i] for i in range(1, len(tree) + 1)]


def tree_gru_top_down(tree: DependencyTree, label_embs: LabelEmbeddings,
                      params: TreeGruParams, order: list[int] | None = None) -> list[Tensor]:
    """h_down for every token; the root sees a zero parent state."""
    h = params.hidden
    labels = label_embs.lookup(tree)
    zero = Tensor(np.zeros(h))
    states: dict[int, Tensor] = {}
    for i in order or tree.top_down_order():
        parent = states[tree.head(i)] if tree.head(i) else zero
        l_i = nx.row(labels, i - 1)
        gates = nx.sigmoid(nx.add(nx.matmul(nx.concat([l_i, parent]), params.down_gates),
                                  params.down_gates_b))
        r, z = nx.cols(gates, 0, h), nx.cols(gates, h, 2 * h)
        cand = nx.tanh(nx.add(
            nx.matmul(nx.concat([l_i, nx.hadamard(r, parent)]), params.down_cand),
            params.down_cand_b))
        states[i] = nx.add(nx.hadamard(nx.one_minus(z), parent), nx.hadamard(z, cand))
    return [states[i] for i in range(1, len(tree) + 1)]


def tree_gru_encode(tree: DependencyTree, label_embs: LabelEmbeddings,
                    params: TreeGruParams) -> Tensor:
    """Matrix of h_up (+) h_down rows, shape (n, 2h)."""
    up = tree_gru_bottom_up(tree, label_embs, params)
    down = tree_gru_top_down(tree, label_embs, params)
    return nx.stack([nx.concat([u, d]) for u, d in zip(up, down)])


def _sum(ts: list[Tensor]) -> Tensor:
    out = ts[0]
    for t in ts[1:]:
        out = nx.add(out, t)
    return out


# ---------------------------------------------------------------------------
# SDP


def sdp_paths(tree: DependencyTree, i: int, p: int) -> tuple[list[int], list[int]]:
    a = lca(tree, i, p)
    return path_to_ancestor(tree, i, a), path_to_ancestor(tree, p, a)


def sdp_encode(tree: DependencyTree, label_embs: LabelEmbeddings, i: int, p: int,
               labels: Tensor | None = None) -> Tensor:
    """Max-pooled labels on path(i, lca) (+) max-pooled labels on path(p, lca)."""
    if labels is None:
        labels = label_embs.lookup(tree)
    left, right = sdp_paths(tree, i, p)
    return nx.concat([
        nx.elementwise_max([nx.row(labels, j - 1) for j in left]),
        nx.elementwise_max([nx.row(labels, k - 1) for k in right]),
    ])


# ---------------------------------------------------------------------------
# TPF


def tpf_extract(tree: DependencyTree, i: int, p: int, clip: int | None = None) -> tuple[int, int]:
    """(edges from p up to lca, edges from i up to lca), optionally clipped."""
    a = lca(tree, i, p)
    d1 = tree.depth(p) - tree.depth(a)
    d2 = tree.depth(i) - tree.depth(a)
    if clip is not None:
        d1, d2 = min(d1, clip), min(d2, clip)
    return d1, d2


def tpf_encode(pair: tuple[int, int], table: TpfTable) -> Tensor:
    return nx.embedding_lookup(table.table, table.index(pair))


# ---------------------------------------------------------------------------
# PE


def classify_pattern(up: int, down: int) -> str:
    """Pattern name from (dist(i, lca), dist(p, lca))."""
    if up == 0 and down == 0:
        return "self"
    if down == 0:
        return {1: "child", 2: "grandchild"}.get(up, "descendant")
    if up == 0:
        return {1: "parent", 2: "grandparent"}.get(down, "ancestor")
    if up == 1 and down == 1:
        return "sibling"
    return "other"


def pattern_extract(tree: DependencyTree, i: int, p: int) -> str:
    down, up = tpf_extract(tree, i, p)
    return classify_pattern(up, down)


def pe_labels(tree: DependencyTree, i: int, p: int) -> tuple[str, str, str]:
    """Relation labels of w_i, the LCA and w_p (each to its own head)."""
    a = lca(tree, i, p)
    return tree.label(i), tree.label(a), tree.label(p)


def pe_encode(tree: DependencyTree, label_embs: LabelEmbeddings, inventory: PatternInventory,
              i: int, p: int, labels: Tensor | None = None) -> Tensor:
    if labels is None:
        labels = label_embs.lookup(tree)
    a = lca(tree, i, p)
    pattern = nx.embedding_lookup(inventory.table, inventory.index(pattern_extract(tree, i, p)))
    return nx.concat([pattern, nx.row(labels, i - 1), nx.row(labels, a - 1),
                      nx.row(labels, p - 1)])


def sdp_label_paths(tree: DependencyTree, i: int, p: int) -> tuple[list[str], list[str]]:
    left, right = sdp_paths(tree, i, p)
    return [tree.label(j) for j in left], [tree.label(k) for k in right]
