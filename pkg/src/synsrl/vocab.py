from __future__ import annotations

from typing import Iterable

UNK = "<unk>"


class Vocab:
    """String <-> id map that grows until frozen.

    Index 0 is reserved for the unknown symbol when ``unk`` is set.
    """

    def __init__(self, items: Iterable[str] = (), unk: bool = True):
        self.itos: list[str] = []
        self.stoi: dict[str, int] = {}
        self.unk = unk
        self.frozen = False
        if unk:
            self.add(UNK)
        for item in items:
            self.add(item)

    def add(self, item: str) -> int:
        if item not in self.stoi:
            if self.frozen:
                raise KeyError(f"vocabulary is frozen; cannot add {item!r}")
            self.stoi[item] = len(self.itos)
            self.itos.append(item)
        return self.stoi[item]

    def lookup(self, item: str) -> int:
        if item in self.stoi:
            return self.stoi[item]
        if self.unk:
            return 0
        raise KeyError(item)

    def freeze(self) -> "Vocab":
        self.frozen = True
        return self

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, item: str) -> bool:
        return item in self.stoi

    def __getitem__(self, idx: int) -> str:
        return self.itos[idx]

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.itos == other.itos and self.unk == other.unk

    def to_list(self) -> list[str]:
        return list(self.itos)

    @classmethod
    def from_list(cls, items: list[str], unk: bool = True) -> "Vocab":
        vocab = cls(unk=False)
        for item in items:
            vocab.add(item)
        vocab.unk = unk
        if unk and (not items or items[0] != UNK):
            raise ValueError("vocabulary with unk must start with the unknown symbol")
        return vocab.freeze()
