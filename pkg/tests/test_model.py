import numpy as np
import pytest

from conftest import tiny_config
from synsrl import numerics as nx
from synsrl.decode import brute_force_decode
from synsrl.model import (
    ConfigError,
    Example,
    HighwayLayer,
    ModelConfig,
    SRLModel,
    TrainConfig,
    build_input,
    build_vocabularies,
    classify,
    encode,
    ensemble_log_dists,
    ensemble_predict,
    sequence_score,
    train,
)
from synsrl.numerics import Tensor
from synsrl.synthetic import clause_corpus, random_tree
from synsrl.treebank import LabeledSpan, PredicateFrame, Sentence, tags_to_frame
from synsrl.vocab import Vocab

MODES = ("none", "tree-gru", "sdp", "tpf", "pe")


def make_model(syntax="none", seed=0, corpus=None, **overrides):
    corpus = corpus or clause_corpus(4, seed=1)
    words, labels, roles = build_vocabularies(corpus)
    return SRLModel(tiny_config(syntax, seed=seed, **overrides), words, labels, roles), corpus


def random_layer(rng, d_in, d, backward):
    return HighwayLayer(Tensor(rng.normal(scale=0.5, size=(d_in, 6 * d)), requires_grad=True),
                        Tensor(rng.normal(scale=0.5, size=(d, 5 * d)), requires_grad=True),
                        Tensor(rng.normal(scale=0.1, size=6 * d), requires_grad=True),
                        backward)


# -- configuration -----------------------------------------------------------------


def test_default_input_widths():
    assert ModelConfig().input_dim == 200
    assert ModelConfig(syntax="tpf").input_dim == 300
    assert ModelConfig(syntax="tree-gru").syntax_dim == 200
    assert ModelConfig(syntax="pe").syntax_dim == 400


def test_config_rejects_bad_values():
    with pytest.raises(ConfigError, match="syntax"):
        ModelConfig(syntax="lstm")
    with pytest.raises(ConfigError, match="unknown"):
        ModelConfig.from_dict({"hiddn": 3})
    with pytest.raises(ConfigError):
        TrainConfig.from_dict({"momentum": 0.9})


# -- network pieces ------------------------------------------------------------


def test_build_input_indicator_rows():
    words = Tensor(np.arange(12.0).reshape(4, 3))
    prd = Tensor(np.array([[0.0, 0.0], [1.0, 1.0]]))
    x = build_input([1, 2, 3], 2, words, prd)
    assert x.shape == (3, 5)
    assert x.data[:, 3:].tolist() == [[0, 0], [1, 1], [0, 0]]
    assert x.data[0, :3].tolist() == [3, 4, 5]
    with pytest.raises(IndexError):
        build_input([1, 2], 3, words, prd)
    with pytest.raises(ValueError, match="syntax"):
        build_input([1, 2], 1, words, prd, syntax_vectors=Tensor(np.ones((3, 2))))


def test_encode_single_token():
    rng = np.random.default_rng(0)
    out = encode(Tensor(rng.normal(size=(1, 5))), [random_layer(rng, 5, 4, False),
                                                     random_layer(rng, 4, 4, True)])
    assert out.shape == (1, 4)


def test_direction_mirror():
    # a backward layer on x equals a forward layer on reversed x, reversed
    rng = np.random.default_rng(1)
    x = rng.normal(size=(6, 5))
    fwd = [random_layer(rng, 5, 4, False), random_layer(rng, 4, 4, True)]
    bwd = [HighwayLayer(l.W, l.U, l.b, not l.backward) for l in fwd]
    a = encode(Tensor(x), fwd).data
    b = encode(Tensor(x[::-1].copy()), bwd).data[::-1]
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)


def test_encoder_grad_check():
    rng = np.random.default_rng(2)
    x = Tensor(rng.normal(size=(3, 8)), requires_grad=True)
    layers = [random_layer(rng, 8, 8, k % 2 == 1) for k in range(4)]
    w = rng.normal(size=(3, 8))
    params = {"x": x}
    for k, l in enumerate(layers):
        params.update({f"W{k}": l.W, f"U{k}": l.U, f"b{k}": l.b})
    report = nx.grad_check(lambda: nx.total(nx.hadamard(encode(x, layers), Tensor(w))), params,
                           max_entries=40, rng=np.random.default_rng(0))
    assert report.ok, report.worst


def test_classify_rows_are_distributions():
    rng = np.random.default_rng(3)
    out = classify(Tensor(rng.normal(size=(5, 4))), Tensor(rng.normal(size=(4, 7))),
                   Tensor(rng.normal(size=7)))
    np.testing.assert_allclose(np.exp(out.data).sum(axis=1), 1.0, atol=1e-9)


def test_sequence_score_matches_viterbi():
    model, corpus = make_model()
    ex = corpus[0]
    p = ex.frames[0].predicate
    logp = model.log_dists(ex.sentence, ex.tree, p)
    from synsrl.decode import viterbi
    tags, score = viterbi(logp.data, model.mask)
    assert sequence_score(logp, [model.tag_index[t] for t in tags]) == score
    with pytest.raises(ValueError):
        sequence_score(logp, [0])


# -- model ---------------------------------------------------------------------


@pytest.mark.parametrize("mode", MODES)
def test_end_to_end_gradients(mode):
    corpus = clause_corpus(2, seed=5)
    model, _ = make_model(mode, seed=3, corpus=corpus, embed_init=0.5)
    # short sentence: a hand-built four-token example keeps the check quick
    ex = Example(Sentence(["the", corpus[0].sentence.tokens[1], "sees", "dog"]),
                 random_tree(np.random.default_rng(8), 4, ("det", "nsubj", "dobj")),
                 [PredicateFrame(3, (LabeledSpan(1, 2, "A0"), LabeledSpan(4, 4, "A1")))])
    report = nx.grad_check(lambda: model.loss(ex, ex.frames[0]), model.store,
                           max_entries=12, rng=np.random.default_rng(0))
    assert report.ok, report.worst


def test_prediction_matches_brute_force():
    model, corpus = make_model("tpf", seed=4)
    for ex in corpus:
        n = min(len(ex.sentence), 6)
        sent = Sentence(ex.sentence.tokens[:n])
        tree = random_tree(np.random.default_rng(n), n)
        for p in range(1, n + 1):
            logp = model.log_dists(sent, tree, p).data
            tags, _ = brute_force_decode(logp, model.mask)
            assert model.predict(sent, tree, p) == tags_to_frame(tags, p)


def test_predicate_indicator_is_the_only_predicate_signal():
    model, corpus = make_model("none", seed=5)
    ex = corpus[0]
    a = model.log_dists(ex.sentence, ex.tree, 1).data
    b = model.log_dists(ex.sentence, ex.tree, 2).data
    assert not np.array_equal(a, b)
    model.store["emb.prd"].data[1] = model.store["emb.prd"].data[0]
    a = model.log_dists(ex.sentence, ex.tree, 1).data
    b = model.log_dists(ex.sentence, ex.tree, 2).data
    assert np.array_equal(a, b)


def test_unknown_words_map_to_unk():
    model, corpus = make_model()
    ex = corpus[0]
    sent = Sentence(["zzz"] + list(ex.sentence.tokens[1:]))
    out = model.log_dists(sent, ex.tree, 2).data
    assert np.all(np.isfinite(out))


@pytest.mark.parametrize("mode", MODES)
def test_checkpoint_roundtrip_predicts_identically(mode, tmp_path):
    model, corpus = make_model(mode, seed=6)
    back = SRLModel.load(model.save(tmp_path / "m.json"))
    assert back.to_json() == model.to_json()
    for ex in corpus:
        p = ex.frames[0].predicate
        assert np.array_equal(model.log_dists(ex.sentence, ex.tree, p).data,
                              back.log_dists(ex.sentence, ex.tree, p).data)


def test_external_vectors_widen_the_input():
    model, corpus = make_model(external_dim=3)
    ex = corpus[0]
    ext = np.ones((len(ex.sentence), 3))
    assert model.log_dists(ex.sentence, ex.tree, 2, ext).shape[0] == len(ex.sentence)
    with pytest.raises(ValueError):
        model.log_dists(ex.sentence, ex.tree, 2)
    with pytest.raises(ValueError):
        model.log_dists(ex.sentence, ex.tree, 2, np.ones((1, 3)))


# -- training ------------------------------------------------------------------


def test_training_reduces_loss_and_is_deterministic():
    corpus = clause_corpus(4, seed=2)
    tc = TrainConfig(epochs=4, batch_size=2, seed=1)
    a = train(corpus, tiny_config(), tc)
    b = train(corpus, tiny_config(), tc)
    losses = [e.loss for e in a.history]
    assert losses[-1] < losses[0]
    assert losses == [e.loss for e in b.history]
    assert a.model.to_json() == b.model.to_json()


def test_training_keeps_dev_best():
    corpus = clause_corpus(4, seed=2)
    res = train(corpus, tiny_config(), TrainConfig(epochs=3, batch_size=2), dev=corpus)
    best = max(res.history, key=lambda e: e.dev_f1)
    assert res.best_epoch == best.epoch
    from synsrl.analysis import evaluate
    gold = [f for ex in corpus for f in ex.frames]
    pred = [f for ex in corpus for f in res.model.predict_example(ex)]
    assert evaluate(gold, pred).f1 == best.dev_f1


def test_training_needs_predicates():
    ex = clause_corpus(1)[0]
    with pytest.raises(ValueError):
        train([Example(ex.sentence, ex.tree, [])], tiny_config())


# -- ensembles -----------------------------------------------------------------


def test_single_member_ensemble_is_the_model():
    model, corpus = make_model(seed=7)
    for ex in corpus:
        p = ex.frames[0].predicate
        assert ensemble_predict(ex.sentence, ex.tree, p, [model]) == model.predict(ex.sentence, ex.tree, p)
        assert ensemble_predict(ex.sentence, ex.tree, p, [model] * 3) == model.predict(ex.sentence, ex.tree, p)


def test_ensemble_averages_log_probabilities():
    corpus = clause_corpus(3, seed=1)
    models = [make_model(seed=s, corpus=corpus)[0] for s in (1, 2, 3)]
    ex = corpus[0]
    p = ex.frames[0].predicate
    # cut to five tokens so the brute-force oracle stays small
    sent, tree = Sentence(ex.sentence.tokens[:5]), random_tree(np.random.default_rng(0), 5)
    dists = [m.log_dists(sent, tree, p).data for m in models]
    avg = ensemble_log_dists(models, sent, tree, p)
    np.testing.assert_allclose(avg, (dists[0] + dists[1] + dists[2]) / 3, rtol=0, atol=1e-15)
    tags, _ = brute_force_decode(avg, models[0].mask)
    assert ensemble_predict(sent, tree, p, models) == tags_to_frame(tags, p)


def test_ensemble_rejects_mismatched_tags():
    a, corpus = make_model()
    b = SRLModel(a.config, a.words, a.labels, ["V", "A0"])
    ex = corpus[0]
    with pytest.raises(ValueError, match="tag set"):
        ensemble_predict(ex.sentence, ex.tree, 2, [a, b])
    with pytest.raises(ValueError):
        ensemble_predict(ex.sentence, ex.tree, 2, [])


def test_vocab_roundtrip():
    v = Vocab(["a", "b"])
    assert Vocab.from_list(v.to_list()).to_list() == v.to_list()
    assert v.lookup("zzz") == 0


def test_one_epoch_beats_initial_loss():
    corpus = clause_corpus(4, seed=2)

    def mean_loss(model):
        pairs = [(ex, f) for ex in corpus for f in ex.frames]
        return sum(float(model.loss(ex, f).data) for ex, f in pairs) / len(pairs)

    # a fresh model with the same seed is exactly the trainer's starting point
    initial = SRLModel(tiny_config(), *build_vocabularies(corpus))
    trained = train(corpus, tiny_config(), TrainConfig(epochs=1, batch_size=1)).model
    assert mean_loss(trained) < mean_loss(initial)
