"""Predicate-indicator highway-LSTM tagger with optional syntax inputs.

One instance is a (sentence, predicate) pair.  The input row for token i is
``word(i) (+) indicator(i == p) (+) syntax(i, p)? (+) external(i)?``.  Four
LSTM layers run in alternating directions (fwd, bwd, fwd, bwd) with highway
connections; the top (backward) layer feeds a softmax over BIO tags and a
constrained Viterbi pass picks the output sequence.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import numerics as nx
from . import syntax as syn
from .decode import build_transition_mask, sequence_score as _lattice_score, tag_set, viterbi
from .numerics import ParameterStore, Tensor
from .treebank import DependencyTree, PredicateFrame, Sentence, spans_to_bio, tags_to_frame
from .vocab import Vocab

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class ModelConfig:
    word_dim: int = 100
    prd_dim: int = 100
    label_dim: int = 100
    tpf_dim: int = 100
    pattern_dim: int = 100
    tree_hidden: int = 100
    hidden: int = 300
    layers: int = 4
    syntax: str = "none"
    external_dim: int = 0
    tpf_clip: int = 7
    embed_init: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.syntax not in syn.SYNTAX_MODES:
            raise ConfigError(f"unknown syntax mode {self.syntax!r}; "
                              f"expected one of {', '.join(syn.SYNTAX_MODES)}")
        for name in ("word_dim", "prd_dim", "hidden", "layers"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.external_dim < 0 or self.tpf_clip < 0:
            raise ConfigError("external_dim and tpf_clip must be non-negative")

    @property
    def syntax_dim(self) -> int:
        return {
            "none": 0,
            "tree-gru": 2 * self.tree_hidden,
            "sdp": 2 * self.label_dim,
            "tpf": self.tpf_dim,
            "pe": self.pattern_dim + 3 * self.label_dim,
        }[self.syntax]

    @property
    def input_dim(self) -> int:
        return self.word_dim + self.prd_dim + self.syntax_dim + self.external_dim

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {', '.join(sorted(unknown))}")
        return cls(**d)


@dataclass
class TrainConfig:
    epochs: int = 500
    batch_size: int = 80
    rho: float = 0.95
    eps: float = 1e-6
    clip: float = 1.0
    lr: float = 1.0
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown training config keys: {', '.join(sorted(unknown))}")
        return cls(**d)


@dataclass
class Example:
    """A sentence with its tree, gold frames and optional external vectors."""

    sentence: Sentence
    tree: DependencyTree
    frames: list[PredicateFrame] = field(default_factory=list)
    external: np.ndarray | None = None

    def __post_init__(self):
        if len(self.sentence) != len(self.tree):
            raise ValueError(f"sentence has {len(self.sentence)} tokens, tree {len(self.tree)}")


# ---------------------------------------------------------------------------
# network pieces


def build_input(word_ids: Sequence[int], p: int, word_table: Tensor, prd_table: Tensor,
                syntax_vectors: Tensor | None = None,
                external_vectors: Tensor | np.ndarray | None = None) -> Tensor:
    """Input matrix, one row per token; ``p`` is 1-based."""
    n = len(word_ids)
    if not 1 <= p <= n:
        raise IndexError(f"predicate {p} outside 1..{n}")
    parts = [nx.embedding_lookup(word_table, word_ids),
             nx.embedding_lookup(prd_table, [int(i == p - 1) for i in range(n)])]
    for extra, what in ((syntax_vectors, "syntax"), (external_vectors, "external")):
        if extra is None:
            continue
        extra = extra if isinstance(extra, Tensor) else Tensor(extra)
        if extra.data.ndim != 2 or extra.shape[0] != n:
            raise ValueError(f"{what} vectors: expected {n} rows, got shape {extra.shape}")
        parts.append(extra)
    return nx.concat(parts, axis=1)


@dataclass
class HighwayLayer:
    """One directional LSTM layer with a highway gate.

    ``W`` maps the layer input to the i, f, o, t gates, the candidate and the
    highway projection (6d columns); ``U`` maps the previous output to the
    five recurrent pre-activations.
    """

    W: Tensor  # (d_in, 6d)
    U: Tensor  # (d, 5d)
    b: Tensor  # (6d,)
    backward: bool

    @property
    def hidden(self) -> int:
        return self.U.shape[0]


def run_layer(x: Tensor, layer: HighwayLayer) -> Tensor:
    d = layer.hidden
    n = x.shape[0]
    xw = nx.add(nx.matmul(x, layer.W), layer.b)
    h = Tensor(np.zeros(d))
    c = Tensor(np.zeros(d))
    outputs: list[Tensor | None] = [None] * n
    steps = range(n - 1, -1, -1) if layer.backward else range(n)
    for t in steps:
        xt = nx.row(xw, t)
        pre = nx.add(nx.cols(xt, 0, 5 * d), nx.matmul(h, layer.U))
        gates = nx.sigmoid(nx.cols(pre, 0, 4 * d))
        i_g, f_g, o_g, t_g = (nx.cols(gates, k * d, (k + 1) * d) for k in range(4))
        g = nx.tanh(nx.cols(pre, 4 * d, 5 * d))
        c = nx.add(nx.hadamard(f_g, c), nx.hadamard(i_g, g))
        h_lstm = nx.hadamard(o_g, nx.tanh(c))
        h = nx.add(nx.hadamard(t_g, h_lstm), nx.hadamard(nx.one_minus(t_g), nx.cols(xt, 5 * d, 6 * d)))
        outputs[t] = h
    return nx.stack(outputs)


def encode(inputs: Tensor, layers: Sequence[HighwayLayer]) -> Tensor:
    """Token representations from the top layer, shape (n, d)."""
    if inputs.shape[0] < 1:
        raise ValueError("empty input")
    h = inputs
    for layer in layers:
        h = run_layer(h, layer)
    return h


def classify(h: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Per-token log-probabilities over the tag set, shape (n, |tags|)."""
    return nx.log_softmax(nx.add(nx.matmul(h, weight), bias))


def sequence_score(log_dists, tags: Sequence[int]) -> float:
    data = log_dists.data if isinstance(log_dists, Tensor) else np.asarray(log_dists)
    if len(tags) != data.shape[0]:
        raise ValueError(f"{len(tags)} tags for {data.shape[0]} positions")
    return _lattice_score(data, tags)


# ---------------------------------------------------------------------------
# the model


class SRLModel:
    def __init__(self, config: ModelConfig, words: Vocab, labels: Vocab, roles: Sequence[str],
                 store: ParameterStore | None = None):
        self.config = config
        self.words = words
        self.labels = labels
        self.roles = list(roles)
        self.tags = tag_set(self.roles)
        self.tag_index = {t: i for i, t in enumerate(self.tags)}
        self.mask = build_transition_mask(self.roles)
        if store is None:
            store = self._init_params()
        self.store = store
        self._bind()

    # -- parameters --------------------------------------------------------

    def _init_params(self) -> ParameterStore:
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        s = ParameterStore()
        s.add("emb.word", nx.uniform(rng, (len(self.words), cfg.word_dim), cfg.embed_init))
        s.add("emb.prd", nx.uniform(rng, (2, cfg.prd_dim), cfg.embed_init))
        if cfg.syntax in ("tree-gru", "sdp", "pe"):
            syn.LabelEmbeddings.create(s, self.labels, cfg.label_dim, rng, cfg.embed_init)
        if cfg.syntax == "tree-gru":
            syn.TreeGruParams.create(s, cfg.label_dim, cfg.tree_hidden, rng)
        elif cfg.syntax == "tpf":
            syn.TpfTable.create(s, cfg.tpf_clip, cfg.tpf_dim, rng, cfg.embed_init)
        elif cfg.syntax == "pe":
            syn.PatternInventory.create(s, cfg.pattern_dim, rng, cfg.embed_init)
        d_in, d = cfg.input_dim, cfg.hidden
        for k in range(cfg.layers):
            s.add(f"enc.{k}.W", nx.glorot(rng, d_in, 6 * d))
            s.add(f"enc.{k}.U", np.concatenate([nx.orthogonal(rng, d, d) for _ in range(5)], axis=1))
            s.add(f"enc.{k}.b", np.zeros(6 * d))
            d_in = d
        s.add("cls.W", nx.glorot(rng, d, len(self.tags)))
        s.add("cls.b", np.zeros(len(self.tags)))
        return s

    def _bind(self) -> None:
        cfg, s = self.config, self.store
        self.label_embs = (syn.LabelEmbeddings(self.labels, s["syntax.labels"])
                           if "syntax.labels" in s else None)
        self.tree_gru = syn.TreeGruParams.from_store(s) if cfg.syntax == "tree-gru" else None
        self.tpf = syn.TpfTable(cfg.tpf_clip, s["syntax.tpf"]) if cfg.syntax == "tpf" else None
        self.patterns = (syn.PatternInventory(syn.PATTERNS, s["syntax.patterns"])
                         if cfg.syntax == "pe" else None)
        # alternating directions; the top layer is backward when the count is even
        self.layers = [
            HighwayLayer(s[f"enc.{k}.W"], s[f"enc.{k}.U"], s[f"enc.{k}.b"],
                         backward=(cfg.layers - 1 - k) % 2 == 0)
            for k in range(cfg.layers)
        ]

    # -- forward -----------------------------------------------------------

    def syntax_vectors(self, tree: DependencyTree, p: int) -> Tensor | None:
        mode = self.config.syntax
        n = len(tree)
        if mode == "none":
            return None
        if mode == "tree-gru":
            return syn.tree_gru_encode(tree, self.label_embs, self.tree_gru)
        if mode == "tpf":
            ids = [self.tpf.index(syn.tpf_extract(tree, i, p)) for i in range(1, n + 1)]
            return nx.embedding_lookup(self.tpf.table, ids)
        labels = self.label_embs.lookup(tree)
        if mode == "sdp":
            rows = [syn.sdp_encode(tree, self.label_embs, i, p, labels) for i in range(1, n + 1)]
        else:
            rows = [syn.pe_encode(tree, self.label_embs, self.patterns, i, p, labels)
                    for i in range(1, n + 1)]
        return nx.stack(rows)

    def log_dists(self, sentence: Sentence, tree: DependencyTree, p: int,
                  external: np.ndarray | None = None) -> Tensor:
        cfg = self.config
        if cfg.external_dim and external is None:
            raise ValueError("model expects external vectors")
        if external is not None:
            external = np.asarray(external, dtype=np.float64)
            if not cfg.external_dim:
                external = None
            elif external.shape != (len(sentence), cfg.external_dim):
                raise ValueError(f"external vectors: expected shape "
                                 f"{(len(sentence), cfg.external_dim)}, got {external.shape}")
        ids = [self.words.lookup(w) for w in sentence.tokens]
        x = build_input(ids, p, self.store["emb.word"], self.store["emb.prd"],
                        self.syntax_vectors(tree, p), external)
        h = encode(x, self.layers)
        return classify(h, self.store["cls.W"], self.store["cls.b"])

    def gold_tag_ids(self, frame: PredicateFrame, n: int) -> list[int]:
        tags = spans_to_bio(frame, n)
        try:
            return [self.tag_index[t] for t in tags]
        except KeyError as exc:
            raise ValueError(f"role of tag {exc.args[0]} not in the model's role set") from None

    def loss(self, example: Example, frame: PredicateFrame) -> Tensor:
        """Mean token negative log-likelihood for one predicate."""
        n = len(example.sentence)
        logp = self.log_dists(example.sentence, example.tree, frame.predicate, example.external)
        return nx.scale(nx.mean(nx.pick(logp, self.gold_tag_ids(frame, n))), -1.0)

    def predict(self, sentence: Sentence, tree: DependencyTree, p: int,
                external: np.ndarray | None = None) -> PredicateFrame:
        logp = self.log_dists(sentence, tree, p, external).data
        tags, _ = viterbi(logp, self.mask)
        return tags_to_frame(tags, p)

    def predict_example(self, example: Example, predicates: Sequence[int] | None = None
                        ) -> list[PredicateFrame]:
        if predicates is None:
            predicates = [f.predicate for f in example.frames]
        return [self.predict(example.sentence, example.tree, p, example.external)
                for p in predicates]

    # -- persistence -------------------------------------------------------

    def meta(self) -> dict:
        return {
            "config": dataclasses.asdict(self.config),
            "words": self.words.to_list(),
            "labels": self.labels.to_list(),
            "roles": self.roles,
        }

    def to_json(self) -> str:
        return nx.params_to_json(self.store, self.meta())

    @classmethod
    def from_json(cls, text: str) -> "SRLModel":
        store, meta = nx.params_from_json(text)
        config = ModelConfig.from_dict(meta["config"])
        return cls(config, Vocab.from_list(meta["words"]), Vocab.from_list(meta["labels"]),
                   meta["roles"], store)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "SRLModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_vocabularies(corpus: Sequence[Example]) -> tuple[Vocab, Vocab, list[str]]:
    words, labels = Vocab(), Vocab()
    roles = {"V"}
    for ex in corpus:
        for w in ex.sentence.tokens:
            words.add(w)
        for lab in ex.tree.labels:
            labels.add(lab)
        for f in ex.frames:
            roles.update(s.role for s in f.spans)
    return words.freeze(), labels.freeze(), ["V"] + sorted(roles - {"V"})


# ---------------------------------------------------------------------------
# training


@dataclass
class EpochLog:
    epoch: int
    loss: float
    dev_f1: float | None
    seconds: float


@dataclass
class TrainResult:
    model: SRLModel
    history: list[EpochLog]
    best_epoch: int


def train(corpus: Sequence[Example], config: ModelConfig, train_config: TrainConfig | None = None,
          dev: Sequence[Example] | None = None,
          callback: Callable[[EpochLog], bool | None] | None = None) -> TrainResult:
    """Fit a model with Adadelta on mean token cross-entropy.

    Each (sentence, predicate) pair is one instance.  With ``dev`` given, the
    parameters from the epoch with the best dev span F1 are kept.  A callback
    that returns True ends training after the current epoch.
    """
    from .analysis import evaluate

    tc = train_config or TrainConfig()
    instances = [(ex, f) for ex in corpus for f in ex.frames]
    if not instances:
        raise ValueError("training corpus has no predicates")
    words, labels, roles = build_vocabularies(corpus)
    model = SRLModel(config, words, labels, roles)
    store = model.store
    rng = np.random.default_rng(tc.seed)
    history: list[EpochLog] = []
    best_f1, best_epoch, best_values = -1.0, 0, store.snapshot()
    for epoch in range(1, tc.epochs + 1):
        start = time.perf_counter()
        order = rng.permutation(len(instances))
        total = 0.0
        for b in range(0, len(order), tc.batch_size):
            batch = order[b:b + tc.batch_size]
            store.zero_grad()
            for k in batch:
                ex, frame = instances[k]
                loss = nx.scale(model.loss(ex, frame), 1.0 / len(batch))
                total += float(loss.data) * len(batch)
                nx.backward(loss)
            nx.clip_global_norm(store, tc.clip)
            nx.adadelta_step(store, tc.rho, tc.eps, tc.lr)
        dev_f1 = None
        if dev:
            gold = [f for ex in dev for f in ex.frames]
            pred = [f for ex in dev for f in model.predict_example(ex)]
            dev_f1 = evaluate(gold, pred).f1
            if dev_f1 > best_f1:
                best_f1, best_epoch, best_values = dev_f1, epoch, store.snapshot()
        entry = EpochLog(epoch, total / len(instances), dev_f1, time.perf_counter() - start)
        history.append(entry)
        log.debug("epoch %d loss %.6f dev_f1 %s", epoch, entry.loss, dev_f1)
        if callback and callback(entry):
            break
    if dev:
        store.restore(best_values)
    else:
        best_epoch = history[-1].epoch
    return TrainResult(model, history, best_epoch)


# ---------------------------------------------------------------------------
# ensembles


def ensemble_log_dists(models: Sequence[SRLModel], sentence: Sentence, tree: DependencyTree,
                       p: int, external: np.ndarray | None = None) -> np.ndarray:
    if not models:
        raise ValueError("empty ensemble")
    tags = models[0].tags
    for m in models[1:]:
        if m.tags != tags:
            raise ValueError("ensemble members disagree on the tag set")
    dists = [m.log_dists(sentence, tree, p, external).data for m in models]
    return np.mean(dists, axis=0)


def ensemble_predict(sentence: Sentence, tree: DependencyTree, p: int,
                     models: Sequence[SRLModel], external: np.ndarray | None = None
                     ) -> PredicateFrame:
    """Average the members' log-probabilities per token, then decode once."""
    avg = ensemble_log_dists(models, sentence, tree, p, external)
    tags, _ = viterbi(avg, models[0].mask)
    return tags_to_frame(tags, p)


def load_external_vectors(path: str | Path) -> dict[int, np.ndarray]:
    """JSON lines of ``{"sentence_id": k, "vectors": [[...], ...]}``."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out[int(rec["sentence_id"])] = np.asarray(rec["vectors"], dtype=np.float64)
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}: line {lineno}: bad external-vector record ({exc})") from None
    return out
