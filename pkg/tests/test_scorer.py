"""Baseline scorer training, scoring, persistence, external ingestion."""

import numpy as np
import pytest

from rankaudit.dataset import Dataset, Split, split
from rankaudit.errors import (
    EmptyTrain,
    IdMismatch,
    ScoreOutOfRange,
    UnknownId,
)
from rankaudit.audit import kendall_tau
from rankaudit.scorer import (
    Scorer,
    ScorerConfig,
    fit,
    ingest_external_scores,
    load_scorer,
    relabel,
    save_scorer,
    score,
)
from rankaudit.synthetic import biased_benchmark

from conftest import make_dataset, make_scores


def _all_train_split(d):
    return Split(train_ids=d.instance_ids, validation_ids=np.array([], dtype=np.int64),
                 test_ids=np.array([], dtype=np.int64), seed=0)


def test_fit_separable_fixture_reaches_perfect_accuracy():
    # 20 points, single feature, labels split cleanly at zero
    x = np.concatenate([np.linspace(-2.0, -0.5, 10), np.linspace(0.5, 2.0, 10)])
    y = np.array([0] * 10 + [1] * 10)
    d = make_dataset([0, 1] * 10, y, features=x)
    model = fit(d, _all_train_split(d), ScorerConfig())
    s = score(model, d, d.instance_ids)
    assert (((s.scores > 0.5) == (y == 1)).all())


def test_fit_constant_labels_scores_on_majority_side():
    d = make_dataset([0, 1, 0, 1], [1, 1, 1, 1], features=[0.0, 1.0, 2.0, 3.0])
    model = fit(d, _all_train_split(d), ScorerConfig(epochs=200))
    s = score(model, d, d.instance_ids)
    assert (s.scores > 0.5).all()


def test_fit_empty_train_raises():
    d = make_dataset([0, 1], [0, 1])
    empty = Split(train_ids=np.array([], dtype=np.int64),
                  validation_ids=d.instance_ids,
                  test_ids=np.array([], dtype=np.int64), seed=0)
    with pytest.raises(EmptyTrain):
        fit(d, empty, ScorerConfig())


def test_fit_loss_history_finite_and_settling():
    d = biased_benchmark(n=400, seed=5)
    model = fit(d, _all_train_split(d), ScorerConfig(epochs=300))
    losses = np.array(model.loss_history)
    assert np.isfinite(losses).all()
    tail = losses[-30:]
    assert (np.diff(tail) <= 1e-9).all()


def test_fit_deterministic():
    d = biased_benchmark(n=300, seed=9)
    s = split(d, (0.8, 0.1, 0.1), seed=2)
    m1 = fit(d, s, ScorerConfig())
    m2 = fit(d, s, ScorerConfig())
    assert np.array_equal(m1.weights["w"], m2.weights["w"])
    assert np.array_equal(m1.weights["b"], m2.weights["b"])


def test_score_zero_weight_model_gives_half():
    d = make_dataset([0, 1, 0], [0, 1, 1], features=[1.0, 2.0, 3.0])
    model = fit(d, _all_train_split(d), ScorerConfig(epochs=1, learning_rate=1e-12))
    model.weights["w"][:] = 0.0
    model.weights["b"][:] = 0.0
    s = score(model, d, d.instance_ids)
    assert (s.scores == 0.5).all()


def test_score_repeatable_and_order_equivariant():
    d = biased_benchmark(n=200, seed=3)
    model = fit(d, _all_train_split(d), ScorerConfig(epochs=50))
    a = score(model, d, d.instance_ids)
    b = score(model, d, d.instance_ids)
    assert np.array_equal(a.scores, b.scores)
    subset = np.array([7, 3, 11], dtype=np.int64)
    got = score(model, d, subset)
    assert got.scores.tolist() == [a.scores[7], a.scores[3], a.scores[11]]


def test_score_monotone_single_feature():
    x = np.linspace(0.0, 1.0, 15)
    y = (x > 0.5).astype(int)
    d = make_dataset([0, 1] * 7 + [0], y, features=x)
    model = fit(d, _all_train_split(d), ScorerConfig(epochs=300))
    s = score(model, d, d.instance_ids)
    assert (np.diff(s.scores) > 0).all()


def test_score_unknown_id():
    d = make_dataset([0, 1], [0, 1])
    model = fit(d, _all_train_split(d), ScorerConfig(epochs=5))
    with pytest.raises(UnknownId):
        score(model, d, [17])


def test_standardization_uses_train_stats_only():
    d = biased_benchmark(n=300, seed=21)
    s = split(d, (0.5, 0.25, 0.25), seed=4)
    model = fit(d, s, ScorerConfig(epochs=50))
    test_scores = score(model, d, s.test_ids).scores
    # permuting test labels changes nothing the scorer saw
    shuffled_label = d.label.copy()
    pos = d.positions_of(s.test_ids)
    shuffled_label[pos] = shuffled_label[pos][::-1]
    d2 = Dataset(
        instance_ids=d.instance_ids, features=d.features, sensitive=d.sensitive,
        label=shuffled_label, schema=d.schema, categories=d.categories,
        sensitive_values=d.sensitive_values, target_values=d.target_values,
    )
    model2 = fit(d2, s, ScorerConfig(epochs=50))
    assert np.array_equal(score(model2, d2, s.test_ids).scores, test_scores) or \
        np.allclose(score(model2, d2, s.test_ids).scores, test_scores)


def test_sensitive_excluded_by_default_included_on_request():
    d = biased_benchmark(n=300, seed=33)
    sp = _all_train_split(d)
    base = fit(d, sp, ScorerConfig(epochs=50))
    assert len(base.weights["w"]) == 6  # 3 numerics + 3 one-hot levels
    with_sens = fit(d, sp, ScorerConfig(epochs=50), include_sensitive=True)
    assert len(with_sens.weights["w"]) == 7


def test_mlp_model_kind_runs_and_is_deterministic():
    d = biased_benchmark(n=300, seed=41)
    sp = _all_train_split(d)
    cfg = ScorerConfig(learning_rate=0.001, epochs=8, model_kind="one-hidden-layer",
                       seed=13)
    m1 = fit(d, sp, cfg)
    m2 = fit(d, sp, cfg)
    s1 = score(m1, d, d.instance_ids).scores
    s2 = score(m2, d, d.instance_ids).scores
    assert np.array_equal(s1, s2)
    assert np.isfinite(m1.loss_history).all()
    assert m1.loss_history[-1] < m1.loss_history[0]


def test_scorer_persistence_round_trip(tmp_path):
    d = biased_benchmark(n=200, seed=8)
    model = fit(d, _all_train_split(d), ScorerConfig(epochs=40))
    path = tmp_path / "scorer.txt"
    save_scorer(model, path)
    loaded = load_scorer(path)
    assert loaded.config == model.config
    assert np.array_equal(loaded.weights["w"], model.weights["w"])
    a = score(model, d, d.instance_ids).scores
    b = score(loaded, d, d.instance_ids).scores
    assert np.array_equal(a, b)


# --- external scores ----------------------------------------------------------------

def _write_scores(path, rows):
    lines = ["instance_id,score"] + [f"{i},{s}" for i, s in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_external_scores_echoing_baseline_gives_tau_one(tmp_path):
    d = make_dataset([0, 1, 0, 1], [0, 1, 0, 1])
    base = make_scores([0.1, 0.4, 0.6, 0.9])
    path = tmp_path / "ext.csv"
    _write_scores(path, zip(base.instance_ids, base.scores))
    ext = ingest_external_scores(path, d, "echo")
    assert kendall_tau(base.scores, ext.scores) == 1.0


def test_external_scores_reversed_gives_tau_minus_one(tmp_path):
    d = make_dataset([0, 1, 0, 1], [0, 1, 0, 1])
    base = make_scores([0.1, 0.4, 0.6, 0.9])
    path = tmp_path / "ext.csv"
    _write_scores(path, zip(base.instance_ids, 1.0 - base.scores))
    ext = ingest_external_scores(path, d, "reversed")
    assert kendall_tau(base.scores, ext.scores) == -1.0


def test_external_scores_out_of_range(tmp_path):
    d = make_dataset([0, 1], [0, 1])
    path = tmp_path / "ext.csv"
    _write_scores(path, [(0, 1.2), (1, 0.5)])
    with pytest.raises(ScoreOutOfRange):
        ingest_external_scores(path, d, "bad")


def test_external_scores_clamps_tiny_excursions(tmp_path):
    d = make_dataset([0, 1], [0, 1])
    path = tmp_path / "ext.csv"
    _write_scores(path, [(0, 1.0 + 5e-10), (1, -5e-10)])
    ext = ingest_external_scores(path, d, "clamped")
    assert ext.scores.tolist() == [1.0, 0.0]


def test_external_scores_id_contract(tmp_path):
    d = make_dataset([0, 1], [0, 1])
    path = tmp_path / "ext.csv"
    _write_scores(path, [(0, 0.5), (9, 0.5)])
    with pytest.raises(UnknownId):
        ingest_external_scores(path, d, "foreign")
    _write_scores(path, [(0, 0.5), (0, 0.6)])
    with pytest.raises(IdMismatch):
        ingest_external_scores(path, d, "dupes")


def test_relabel_shares_values():
    base = make_scores([0.2, 0.8])
    other = relabel(base, "other")
    assert other.method == "other"
    assert np.array_equal(other.scores, base.scores)
