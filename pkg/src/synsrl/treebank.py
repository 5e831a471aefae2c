"""Sentences, dependency trees, SRL frames and their file formats.

Indices are 1-based everywhere in this module's public API (CoNLL style);
internal arrays are 0-based and converted at the boundary.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class TreebankError(ValueError):
    """Malformed treebank or props input."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise TreebankError("empty sentence")
        for tok in self.tokens:
            if not tok or any(ch.isspace() for ch in tok):
                raise TreebankError(f"invalid token {tok!r}")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class DependencyTree:
    """Head indices (0 = artificial root) and relation labels, one per token."""

    heads: tuple[int, ...]
    labels: tuple[str, ...]
    _depth: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        heads = tuple(int(h) for h in self.heads)
        labels = tuple(self.labels)
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_depth", _validate_heads(heads, labels))

    def __len__(self) -> int:
        return len(self.heads)

    @property
    def root(self) -> int:
        return self.heads.index(0) + 1

    def head(self, i: int) -> int:
        return self.heads[i - 1]

    def label(self, i: int) -> str:
        return self.labels[i - 1]

    def depth(self, i: int) -> int:
        """Number of arcs between token ``i`` and the root token."""
        return self._depth[i - 1]

    def children(self, i: int) -> list[int]:
        return [j + 1 for j, h in enumerate(self.heads) if h == i]

    def root_path(self, i: int) -> list[int]:
        path = [i]
        while self.heads[path[-1] - 1] != 0:
            path.append(self.heads[path[-1] - 1])
        return path

    def bottom_up_order(self) -> list[int]:
        """Tokens ordered children-before-parents (deepest first, ties by index)."""
        return sorted(range(1, len(self) + 1), key=lambda i: (-self._depth[i - 1], i))

    def top_down_order(self) -> list[int]:
        return sorted(range(1, len(self) + 1), key=lambda i: (self._depth[i - 1], i))


def _validate_heads(heads: Sequence[int], labels: Sequence[str]) -> tuple[int, ...]:
    n = len(heads)
    if n == 0:
        raise TreebankError("empty tree")
    if len(labels) != n:
        raise TreebankError(f"{n} heads but {len(labels)} labels")
    roots = [i for i, h in enumerate(heads, 1) if h == 0]
    if len(roots) != 1:
        raise TreebankError(f"expected exactly one root, found {len(roots)}")
    for i, h in enumerate(heads, 1):
        if not 0 <= h <= n:
            raise TreebankError(f"head {h} of token {i} out of range")
        if h == i:
            raise TreebankError(f"token {i} is its own head")
    depth = [-1] * n
    for start in range(1, n + 1):
        chain = []
        node = start
        while node != 0 and depth[node - 1] < 0:
            if node in chain:
                raise TreebankError(f"cycle through token {node}")
            chain.append(node)
            node = heads[node - 1]
        base = -1 if node == 0 else depth[node - 1]
        for k, v in enumerate(reversed(chain)):
            depth[v - 1] = base + 1 + k
    return tuple(depth)


@dataclass(frozen=True, order=True)
class LabeledSpan:
    start: int
    end: int
    role: str

    def __post_init__(self):
        if not 1 <= self.start <= self.end:
            raise TreebankError(f"invalid span [{self.start}, {self.end}]")

    def overlaps(self, other: "LabeledSpan") -> bool:
        return self.start <= other.end and other.start <= self.end

    def __len__(self) -> int:
        return self.end - self.start + 1

    def __str__(self) -> str:
        return f"{self.role}:[{self.start},{self.end}]"


@dataclass(frozen=True)
class PredicateFrame:
    """A predicate position and its non-overlapping argument spans (sorted)."""

    predicate: int
    spans: tuple[LabeledSpan, ...] = ()

    def __post_init__(self):
        if self.predicate < 1:
            raise TreebankError(f"invalid predicate index {self.predicate}")
        spans = tuple(sorted(self.spans))
        for a, b in zip(spans, spans[1:]):
            if a.overlaps(b):
                raise TreebankError(f"overlapping spans {a} and {b}")
        object.__setattr__(self, "spans", spans)

    def arguments(self) -> tuple[LabeledSpan, ...]:
        """Spans that count for evaluation (everything except V)."""
        return tuple(s for s in self.spans if s.role != "V")


def _check_indices(tree: DependencyTree, *indices: int) -> None:
    n = len(tree)
    for i in indices:
        if not 1 <= i <= n:
            raise IndexError(f"token index {i} outside 1..{n}")


def lca(tree: DependencyTree, i: int, j: int) -> int:
    """Lowest common ancestor of tokens ``i`` and ``j`` (a token is its own ancestor)."""
    _check_indices(tree, i, j)
    while tree.depth(i) > tree.depth(j):
        i = tree.head(i)
    while tree.depth(j) > tree.depth(i):
        j = tree.head(j)
    while i != j:
        i, j = tree.head(i), tree.head(j)
    return i


def path_to_ancestor(tree: DependencyTree, i: int, a: int) -> list[int]:
    """Tokens from ``i`` up to its ancestor ``a``, both endpoints included."""
    _check_indices(tree, i, a)
    path = [i]
    while path[-1] != a:
        h = tree.head(path[-1])
        if h == 0:
            raise TreebankError(f"token {a} is not an ancestor of token {i}")
        path.append(h)
    return path


def tree_distance(tree: DependencyTree, i: int, j: int) -> int:
    a = lca(tree, i, j)
    return tree.depth(i) + tree.depth(j) - 2 * tree.depth(a)


# ---------------------------------------------------------------------------
# CoNLL-X dependency files


def parse_conllx(text: str) -> list[tuple[Sentence, DependencyTree]]:
    """Read blank-line separated CoNLL-X blocks (id, form, ..., head, deprel)."""
    out = []
    rows: list[tuple[int, list[str]]] = []

    def flush():
        if not rows:
            return
        first_line = rows[0][0]
        tokens, heads, labels = [], [], []
        for k, (lineno, cols) in enumerate(rows, 1):
            if len(cols) < 8:
                raise TreebankError(f"expected at least 8 columns, got {len(cols)}", lineno)
            try:
                idx, head = int(cols[0]), int(cols[6])
            except ValueError:
                raise TreebankError("non-integer id or head column", lineno) from None
            if idx != k:
                raise TreebankError(f"expected token id {k}, got {idx}", lineno)
            tokens.append(cols[1])
            heads.append(head)
            labels.append(cols[7])
        try:
            sent = Sentence(tokens)
            tree = DependencyTree(heads, labels)
        except TreebankError as exc:
            raise TreebankError(f"sentence starting here: {exc}", first_line) from None
        out.append((sent, tree))
        rows.clear()

    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            flush()
        elif line.startswith("#"):
            continue
        else:
            rows.append((lineno, line.split("\t")))
    flush()
    return out


def write_conllx(pairs: Iterable[tuple[Sentence, DependencyTree]]) -> str:
    blocks = []
    for sent, tree in pairs:
        lines = [
            "\t".join([str(i), tok, "_", "_", "_", "_", str(h), lab, "_", "_"])
            for i, (tok, h, lab) in enumerate(zip(sent.tokens, tree.heads, tree.labels), 1)
        ]
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


# ---------------------------------------------------------------------------
# CoNLL-2005 props files

_OPEN = re.compile(r"^\(([^()*]+)\*")


@dataclass(frozen=True)
class PropsSentence:
    """One props block: the predicate column plus one frame per predicate."""

    lemmas: tuple[str, ...]
    frames: tuple[PredicateFrame, ...]

    @property
    def predicates(self) -> list[int]:
        return [i for i, lem in enumerate(self.lemmas, 1) if lem != "-"]


def _parse_bracket_column(cells: Sequence[str], linenos: Sequence[int]) -> list[LabeledSpan]:
    spans = []
    open_role = None
    open_start = 0
    for i, (cell, lineno) in enumerate(zip(cells, linenos), 1):
        m = _OPEN.match(cell)
        rest = cell
        if m:
            if open_role is not None:
                raise TreebankError(f"nested or overlapping span opened in {cell!r}", lineno)
            open_role, open_start = m.group(1), i
            rest = cell[m.end() - 1:]
        if not rest.startswith("*"):
            raise TreebankError(f"bad bracket cell {cell!r}", lineno)
        closing = rest[1:]
        if closing not in ("", ")"):
            raise TreebankError(f"bad bracket cell {cell!r}", lineno)
        if closing == ")":
            if open_role is None:
                raise TreebankError(f"unbalanced ')' in {cell!r}", lineno)
            spans.append(LabeledSpan(open_start, i, open_role))
            open_role = None
    if open_role is not None:
        raise TreebankError(f"span {open_role} opened at token {open_start} never closed", linenos[-1])
    return spans


def _drop_implicit_v(spans: list[LabeledSpan], p: int) -> list[LabeledSpan]:
    return [s for s in spans if not (s.role == "V" and s.start == s.end == p)]


def parse_props_blocks(text: str) -> list[PropsSentence]:
    out = []
    rows: list[tuple[int, list[str]]] = []

    def flush():
        if not rows:
            return
        width = len(rows[0][1])
        for lineno, cols in rows:
            if len(cols) != width:
                raise TreebankError(f"expected {width} columns, got {len(cols)}", lineno)
        lemmas = tuple(cols[0] for _, cols in rows)
        preds = [i for i, lem in enumerate(lemmas, 1) if lem != "-"]
        if len(preds) != width - 1:
            raise TreebankError(
                f"{len(preds)} predicates but {width - 1} argument columns", rows[0][0]
            )
        linenos = [ln for ln, _ in rows]
        frames = []
        for k, p in enumerate(preds, 1):
            spans = _parse_bracket_column([cols[k] for _, cols in rows], linenos)
            try:
                frames.append(PredicateFrame(p, tuple(_drop_implicit_v(spans, p))))
            except TreebankError as exc:
                raise TreebankError(str(exc), rows[0][0]) from None
        out.append(PropsSentence(lemmas, tuple(frames)))
        rows.clear()

    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            flush()
        else:
            rows.append((lineno, line.split()))
    flush()
    return out


def parse_props(text: str) -> list[list[PredicateFrame]]:
    """Frames per sentence from CoNLL-2005 props text."""
    return [list(block.frames) for block in parse_props_blocks(text)]


def _bracket_column(frame: PredicateFrame, n: int) -> list[str]:
    cells = ["*"] * n
    spans = list(frame.spans)
    if not any(s.start <= frame.predicate <= s.end for s in spans):
        spans.append(LabeledSpan(frame.predicate, frame.predicate, "V"))
    for s in spans:
        if s.end > n:
            raise TreebankError(f"span {s} exceeds sentence length {n}")
        cells[s.start - 1] = f"({s.role}" + cells[s.start - 1]
        cells[s.end - 1] = cells[s.end - 1] + ")"
    return cells


def write_props(
    frames: Sequence[Sequence[PredicateFrame]],
    lengths: Sequence[int],
    lemmas: Sequence[Sequence[str]] | None = None,
) -> str:
    """Serialize frames to space-aligned props text.

    ``lemmas[s][i]`` fills the first column at predicate rows; without it the
    predicate rows read ``pred``.
    """
    if len(frames) != len(lengths):
        raise ValueError("frames and lengths differ in length")
    blocks = []
    for s, (sent_frames, n) in enumerate(zip(frames, lengths)):
        sent_frames = sorted(sent_frames, key=lambda f: f.predicate)
        preds = [f.predicate for f in sent_frames]
        if len(set(preds)) != len(preds):
            raise TreebankError(f"sentence {s}: duplicate predicate")
        first = ["-"] * n
        for p in preds:
            if p > n:
                raise TreebankError(f"sentence {s}: predicate {p} exceeds length {n}")
            first[p - 1] = lemmas[s][p - 1] if lemmas is not None else "pred"
        columns = [first] + [_bracket_column(f, n) for f in sent_frames]
        widths = [max(len(c) for c in col) for col in columns]
        lines = []
        for i in range(n):
            cells = [col[i].ljust(w) for col, w in zip(columns, widths)]
            lines.append("  ".join(cells).rstrip())
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def write_props_blocks(blocks: Sequence[PropsSentence]) -> str:
    return write_props(
        [b.frames for b in blocks], [len(b.lemmas) for b in blocks], [b.lemmas for b in blocks]
    )


# ---------------------------------------------------------------------------
# BIO tags


def is_legal_tags(tags: Sequence[str]) -> bool:
    prev = "O"
    for tag in tags:
        if tag.startswith("I-") and prev[2:] != tag[2:]:
            return False
        if tag != "O" and tag[:2] not in ("B-", "I-"):
            return False
        prev = tag
    return True


def spans_to_bio(frame: PredicateFrame, n: int) -> list[str]:
    if frame.predicate > n:
        raise TreebankError(f"predicate {frame.predicate} exceeds length {n}")
    tags = ["O"] * n
    for s in frame.spans:
        if s.end > n:
            raise TreebankError(f"span {s} exceeds length {n}")
        tags[s.start - 1] = "B-" + s.role
        for k in range(s.start, s.end):
            tags[k] = "I-" + s.role
    if not any(s.start <= frame.predicate <= s.end for s in frame.spans):
        tags[frame.predicate - 1] = "B-V"
    return tags


def bio_to_spans(tags: Sequence[str], predicate: int | None = None) -> list[LabeledSpan]:
    """Maximal ``B-X I-X*`` runs as spans.

    With ``predicate`` given, the single-token V span on it is left out, so the
    result matches the frame it was generated from.
    """
    if not is_legal_tags(tags):
        raise TreebankError(f"illegal tag sequence {list(tags)}")
    spans = []
    start, role = 0, None
    for i, tag in enumerate(list(tags) + ["O"], 1):
        if role is not None and not tag.startswith("I-"):
            spans.append(LabeledSpan(start, i - 1, role))
            role = None
        if tag.startswith("B-"):
            start, role = i, tag[2:]
    if predicate is not None:
        spans = _drop_implicit_v(spans, predicate)
    return spans


def tags_to_frame(tags: Sequence[str], predicate: int) -> PredicateFrame:
    return PredicateFrame(predicate, tuple(bio_to_spans(tags, predicate)))

