"""Loading aligned (deps, props, external vectors) files into examples."""
from __future__ import annotations

from pathlib import Path

from .model import Example, load_external_vectors
from .treebank import (
    PropsSentence,
    TreebankError,
    parse_conllx,
    parse_props_blocks,
    write_conllx,
    write_props_blocks,
)


class DataError(Exception):
    """Unreadable or inconsistent input data; the message names the file."""


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None


def read_trees(path: str | Path):
    try:
        return parse_conllx(_read(path))
    except TreebankError as exc:
        raise DataError(f"{path}: {exc}") from None


def read_props(path: str | Path) -> list[PropsSentence]:
    try:
        return parse_props_blocks(_read(path))
    except TreebankError as exc:
        raise DataError(f"{path}: {exc}") from None


def load_corpus(deps_path, props_path, external_path=None) -> tuple[list[Example], list[PropsSentence]]:
    trees = read_trees(deps_path)
    props = read_props(props_path)
    if len(trees) != len(props):
        raise DataError(f"{deps_path} has {len(trees)} sentences but {props_path} has {len(props)}")
    external = {}
    if external_path:
        try:
            external = load_external_vectors(external_path)
        except OSError as exc:
            raise DataError(f"{external_path}: {exc.strerror or exc}") from None
        except ValueError as exc:
            raise DataError(str(exc)) from None
    examples = []
    for k, ((sent, tree), block) in enumerate(zip(trees, props)):
        if len(block.lemmas) != len(sent):
            raise DataError(f"sentence {k}: {len(sent)} tokens in {deps_path} but "
                            f"{len(block.lemmas)} rows in {props_path}")
        for f in block.frames:
            for s in f.spans:
                if s.end > len(sent):
                    raise DataError(f"{props_path}: sentence {k}: span {s} beyond sentence end")
        vec = external.get(k)
        if external_path and vec is None:
            raise DataError(f"{external_path}: no vectors for sentence {k}")
        examples.append(Example(sent, tree, list(block.frames), vec))
    return examples, props


def write_corpus(examples, deps_path, props_path) -> None:
    """Write examples as a CoNLL-X trees file plus a props file; predicate rows use the word."""
    Path(deps_path).write_text(write_conllx([(ex.sentence, ex.tree) for ex in examples]),
                               encoding="utf-8")
    blocks = []
    for ex in examples:
        preds = {f.predicate for f in ex.frames}
        lemmas = tuple(w if i in preds else "-" for i, w in enumerate(ex.sentence.tokens, 1))
        blocks.append(PropsSentence(lemmas, tuple(sorted(ex.frames, key=lambda f: f.predicate))))
    Path(props_path).write_text(write_props_blocks(blocks), encoding="utf-8")
