import dataclasses

import numpy as np
import pytest

from src.numcore.gradcheck import check_gradients
from src.numcore.layers import pairwise_distance
from src.numcore.tensor import Tensor, no_grad
from src.sim.world import WorldParams, generate_world
from src.syfis.builder import generate_dataset
from src.translator.losses import loss_dsl, loss_sig, triplet_hinge
from src.translator.model import TranslatorModel, attended_instruction, encode, soft_attention, translate
from src.translator.pretrain import (
    candidate_features,
    evaluate_translator,
    holdout_split,
    pretrain_translator,
    record_loss,
    translate_record,
)
from src.utils.errors import FormatError, InvalidInputError, NotFoundError, ShapeError


@pytest.fixture
def dataset(tiny_config, detector, world):
    return generate_dataset([world], 6, detector, tiny_config, seed=5)


@pytest.fixture
def worlds(world):
    return {world.world_id: world}


@pytest.fixture
def model(dataset):
    return TranslatorModel(dataset.tokenizer.size, feature_dim=16, dim=4, mlp_hidden=5, max_len=48, seed=0)


def test_loss_sig_ignores_padding():
    dists = Tensor(np.array([[0.25, 0.25, 0.5], [0.5, 0.25, 0.25]]))
    expected = -(np.log(0.5) + np.log(0.25)) / 2
    assert loss_sig(dists, [2, 1]).item() == pytest.approx(expected)
    # shorter targets are padded, so only the first row counts
    assert loss_sig(dists, [2]).item() == pytest.approx(-np.log(0.5))
    with pytest.raises(InvalidInputError):
        loss_sig(dists, [0, 0])


@pytest.mark.parametrize("d_ap, d_an, margin, expected", [
    (1.0, 2.0, 0.5, 0.0),
    (2.0, 1.0, 0.5, 1.5),
    (1.0, 1.2, 0.5, 0.3),
])
def test_triplet_hinge(d_ap, d_an, margin, expected):
    assert triplet_hinge(d_ap, d_an, margin).item() == pytest.approx(expected)


def test_soft_attention_rows_and_permutation(rng):
    text = Tensor(rng.normal(size=(5, 3)))
    weight = Tensor(rng.normal(size=(3, 3)))
    vision = rng.normal(size=(4, 3))
    attended, attention = soft_attention(text, weight, Tensor(vision))
    assert np.allclose(attention.data.sum(axis=1), 1.0)
    order = [2, 0, 3, 1]
    permuted, permuted_attention = soft_attention(text, weight, Tensor(vision[order]))
    assert np.allclose(attended.data, permuted.data)
    assert np.allclose(attention.data[:, order], permuted_attention.data)
    # every hidden row is a convex combination of the vision rows
    lo, hi = vision.min(axis=0), vision.max(axis=0)
    assert np.all(attended.data >= lo - 1e-12) and np.all(attended.data <= hi + 1e-12)


def test_translate_shapes(model, rng):
    tokens = [2, 3, 4, 5, 2]
    features = rng.random(size=(3, 16))
    embeddings = model.embed_tokens(tokens)
    out = translate(model, tokens, features, instruction_embeddings=embeddings)
    assert out.hidden.shape == (5, 4)
    assert out.token_dists.shape == (5, model.vocab_size)
    assert np.allclose(out.token_dists.data.sum(axis=1), 1.0)
    assert out.split_mask.shape == (5, 1)
    assert np.all((out.split_mask.data > 0) & (out.split_mask.data < 1))
    assert out.attention.shape == (5, 3)
    assert np.allclose(out.attended.data, out.split_mask.data * embeddings.data)
    assert translate(model, tokens, features).attended is None


def test_translator_input_validation(model, rng):
    with pytest.raises(InvalidInputError):
        model.encode_text([])
    with pytest.raises(InvalidInputError):
        model.encode_text([2] * 49)
    with pytest.raises(ShapeError):
        model.encode_vision(rng.random(size=(3, 15)))
    with pytest.raises(ShapeError):
        model.encode_vision(np.zeros((0, 16)))
    with pytest.raises(ShapeError):
        attended_instruction(Tensor(np.ones((3, 1))), Tensor(np.ones((2, 4))))


def test_same_seed_same_parameters(dataset):
    a = TranslatorModel(dataset.tokenizer.size, 16, dim=4, mlp_hidden=5, seed=3)
    b = TranslatorModel(dataset.tokenizer.size, 16, dim=4, mlp_hidden=5, seed=3)
    for (name, x), (_, y) in zip(a.store.items(), b.store.items()):
        assert np.array_equal(x.data, y.data), name


def test_dsl_is_margin_when_anchor_equals_positive(model, dataset, worlds):
    record = dataset.records[0]
    vision = model.encode_vision(candidate_features(worlds, record))
    negative = record.negatives[0].instruction.tokens
    loss = loss_dsl(model, record.anchor.tokens, record.anchor.tokens, negative, vision, margin=0.5).item()
    with no_grad():
        h_anchor, _ = encode(model, record.anchor.tokens, None, vision)
        h_negative, _ = encode(model, negative, None, vision)
        d_an = pairwise_distance(h_anchor, h_negative).item()
    assert loss == pytest.approx(max(0.0, 0.5 - d_an))


@pytest.mark.parametrize("literal", [False, True])
def test_record_loss_gradients(model, dataset, worlds, literal):
    record = dataset.records[0]
    features = candidate_features(worlds, record)

    def loss():
        return record_loss(model, record, features, 1.0, 1.0, margin=2.0, literal=literal)[0]
    report = check_gradients(loss, model.store, max_entries=6, rng=np.random.default_rng(0))
    assert report.ok(1e-3), report.worst


def test_record_loss_combines_terms(model, dataset, worlds):
    record = dataset.records[1]
    features = candidate_features(worlds, record)
    total, sig, dsl = record_loss(model, record, features, 0.3, 2.0, margin=0.5)
    assert total.item() == pytest.approx(0.3 * sig.item() + 2.0 * dsl.item())
    assert dsl.item() >= 0.0


def test_candidate_features_checks_record(dataset, worlds):
    record = dataset.records[0]
    features = candidate_features(worlds, record)
    assert features.shape == (len(record.candidates), 16)
    with pytest.raises(NotFoundError):
        candidate_features({}, record)
    shuffled = dataclasses.replace(record, candidates=tuple(reversed(record.candidates)) + ("extra",))
    with pytest.raises(FormatError):
        candidate_features(worlds, shuffled)


def test_holdout_split_keeps_trajectories_whole(dataset):
    train, holdout = holdout_split(dataset.records, 0.3, seed=4)
    assert holdout and train
    assert not {r.trajectory_id for r in train} & {r.trajectory_id for r in holdout}
    assert len(train) + len(holdout) == len(dataset.records)
    again = holdout_split(dataset.records, 0.3, seed=4)
    assert [r.record_id for r in again[1]] == [r.record_id for r in holdout]


def test_pretrain_is_deterministic(tiny_config, dataset, worlds):
    def run():
        model = TranslatorModel.from_config(tiny_config, dataset.tokenizer.size)
        return model, pretrain_translator(model, dataset.records, worlds, tiny_config)
    first_model, first = run()
    second_model, second = run()
    assert len(first.history) == tiny_config.train.pretrain_steps
    assert first.to_dict() == second.to_dict()
    assert first.train_records + first.holdout_records == len(dataset.records)
    assert set(first.holdout) >= {"token_accuracy", "mean_d_ap", "mean_d_an_hard", "mean_d_an_easy"}
    for name, value in first_model.store.values().items():
        assert np.array_equal(value, second_model.store[name].data)


def test_pretrain_no_sig_reports_zero_weight(tiny_config, dataset, worlds):
    tiny_config.ablation.no_sig = True
    assert tiny_config.effective_alphas == (0.0, tiny_config.losses.alpha2)
    model = TranslatorModel.from_config(tiny_config, dataset.tokenizer.size)
    result = pretrain_translator(model, dataset.records, worlds, tiny_config)
    for entry in result.history:
        assert entry["total"] == pytest.approx(tiny_config.losses.alpha2 * entry["dsl"])


def test_translate_record_output(model, dataset, worlds):
    record = dataset.records[0]
    out = translate_record(model, dataset.tokenizer, record, candidate_features(worlds, record))
    assert out["record_id"] == record.record_id
    assert len(out["decoded_tokens"]) == len(record.positive.tokens)
    assert len(out["split_mask"]) == len(record.positive.tokens)
    assert len(out["attention"][0]) == len(record.candidates)
    assert out["positive"] == record.positive.text


@pytest.mark.slow
def test_pretraining_separates_held_out_triplets_and_learns_tokens(tiny_config, detector):
    tiny_config.train.pretrain_steps = 400
    tiny_config.train.pretrain_batch = 16
    tiny_config.train.holdout_fraction = 0.2
    tiny_config.train.log_every = 100
    tiny_config.model.embed_dim = 16
    tiny_config.model.hidden_dim = 16
    tiny_config.model.mlp_hidden = 16
    tiny_config.world.node_count = 16
    params = WorldParams.from_config(tiny_config)
    graphs = [generate_world(seed, params) for seed in (21, 22, 23, 24)]
    dataset = generate_dataset(graphs, 50, detector, tiny_config, seed=5)
    assert len(dataset.records) >= 500
    worlds = {g.world_id: g for g in graphs}

    passed = []
    for seed in range(5):
        tiny_config.seeds.seed = seed
        model = TranslatorModel.from_config(tiny_config, dataset.tokenizer.size)
        result = pretrain_translator(model, dataset.records, worlds, tiny_config)
        _, holdout = holdout_split(dataset.records, tiny_config.train.holdout_fraction, seed)
        assert result.holdout["records"] == len(holdout) > 0
        held = result.holdout
        passed.append(held["mean_d_an_hard"] - held["mean_d_ap"] >= 0.1 and held["token_accuracy"] >= 0.9)
    assert sum(passed) >= 4, passed
