import math

import numpy as np
import pytest

from dialeval.corpus import DialoguePair
from dialeval.embeddings import EmbeddingTable
from dialeval.negative_sampler import (
    NegativeSample,
    SamplerConfig,
    draw_candidate_pool,
    sample_negatives,
    sample_negatives_uniform,
    selection_probabilities,
    weighted_draw,
)


def _unit_candidates(cosines):
    """Rows with exact cosine against the truth direction e1."""
    rows = []
    for c in cosines:
        rows.append([c, math.sqrt(max(0.0, 1.0 - c * c))])
    return np.array(rows)


def test_sampler_config_validation():
    SamplerConfig(pool_size=4, negatives_per_positive=4)
    with pytest.raises(ValueError):
        SamplerConfig(pool_size=0)
    with pytest.raises(ValueError):
        SamplerConfig(temperature=0.0)
    with pytest.raises(ValueError):
        SamplerConfig(temperature=-1.0)
    with pytest.raises(ValueError):
        SamplerConfig(pool_size=4, negatives_per_positive=5)
    with pytest.raises(ValueError):
        SamplerConfig(negatives_per_positive=0)


def test_selection_probabilities_known_value():
    # cosines 0.9 and 0.1 at temperature 0.1: the first weight is
    # e^9 / (e^9 + e^1) = 1 / (1 + e^-8)
    truth = np.array([1.0, 0.0])
    probs = selection_probabilities(truth, _unit_candidates([0.9, 0.1]), 0.1)
    assert probs[0] == pytest.approx(1.0 / (1.0 + math.exp(-8.0)), abs=1e-12)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_selection_probabilities_equal_cosines_are_uniform():
    truth = np.array([1.0, 0.0])
    probs = selection_probabilities(truth, _unit_candidates([0.5] * 4), 0.07)
    np.testing.assert_allclose(probs, 0.25)


def test_selection_probabilities_monotone_in_cosine():
    truth = np.array([1.0, 0.0])
    cosines = [-0.8, -0.2, 0.3, 0.9]
    probs = selection_probabilities(truth, _unit_candidates(cosines), 0.07)
    assert np.all(np.diff(probs) > 0)


def test_high_temperature_flattens_the_distribution():
    truth = np.array([1.0, 0.0])
    cands = _unit_candidates([-0.9, 0.0, 0.9])
    cold = selection_probabilities(truth, cands, 0.05)
    hot = selection_probabilities(truth, cands, 1000.0)
    assert cold.max() > 0.99
    np.testing.assert_allclose(hot, 1 / 3, atol=1e-3)


def test_selection_probabilities_scale_invariant_in_vectors():
    # cosine ignores norms, so scaling candidates must not move probs
    truth = np.array([2.0, 1.0, 0.0])
    rng = np.random.default_rng(0)
    cands = rng.normal(size=(5, 3))
    a = selection_probabilities(truth, cands, 0.07)
    b = selection_probabilities(truth * 3.0, cands * 0.1, 0.07)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_selection_probabilities_validation():
    truth = np.array([1.0, 0.0])
    with pytest.raises(ValueError, match="temperature"):
        selection_probabilities(truth, _unit_candidates([0.5]), 0.0)
    with pytest.raises(ValueError, match="2-D"):
        selection_probabilities(truth, np.array([1.0, 0.0]), 0.07)
    with pytest.raises(ValueError, match="2-D"):
        selection_probabilities(truth, np.empty((0, 2)), 0.07)


def test_weighted_draw_frequencies():
    probs = np.array([0.2, 0.7, 0.1])
    rng = np.random.default_rng(17)
    counts = np.zeros(3)
    for _ in range(20000):
        counts[weighted_draw(rng, probs)] += 1
    np.testing.assert_allclose(counts / 20000, probs, atol=0.02)


def test_weighted_draw_degenerate_distribution():
    rng = np.random.default_rng(0)
    probs = np.array([0.0, 1.0, 0.0])
    assert all(weighted_draw(rng, probs) == 1 for _ in range(100))


def _toy_dataset(responses):
    return [
        DialoguePair(id=f"p{i}", context=("ctx",), response=text)
        for i, text in enumerate(responses)
    ]


@pytest.fixture
def toy():
    words = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"]
    dataset = _toy_dataset(words)
    rng = np.random.default_rng(5)
    entries = {w: rng.normal(size=4) for w in words}
    entries["ctx"] = rng.normal(size=4)
    return dataset, EmbeddingTable(entries)


def test_draw_candidate_pool_excludes_self(toy):
    dataset, _ = toy
    rng = np.random.default_rng(0)
    for _ in range(20):
        pool = draw_candidate_pool(dataset, "p2", 5, rng)
        assert len(pool) == 5
        assert "gamma" not in pool


def test_draw_candidate_pool_too_large(toy):
    dataset, _ = toy
    with pytest.raises(ValueError, match="cannot draw a pool of 6"):
        draw_candidate_pool(dataset, "p0", 6, np.random.default_rng(0))


def test_sample_negatives_basic(toy):
    dataset, table = toy
    config = SamplerConfig(pool_size=5, temperature=0.07,
                           negatives_per_positive=2, seed=3)
    samples = sample_negatives(dataset[0], dataset, config, table)
    assert len(samples) == 2
    texts = [s.negative_response for s in samples]
    assert len(set(texts)) == 2  # without replacement
    for s in samples:
        assert s.pair_id == "p0"
        assert s.negative_response != dataset[0].response
        assert -1.0 <= s.similarity_to_truth <= 1.0
        assert 0.0 < s.sample_probability < 1.0


def test_sample_negatives_reproducible(toy):
    dataset, table = toy
    # temperature high enough that different seeds actually draw
    # different sequences (at 0.07 the softmax is nearly deterministic)
    config = SamplerConfig(pool_size=5, temperature=5.0,
                           negatives_per_positive=3, seed=8)
    first = sample_negatives(dataset[1], dataset, config, table)
    second = sample_negatives(dataset[1], dataset, config, table)
    assert first == second
    other_seed = SamplerConfig(pool_size=5, temperature=5.0,
                               negatives_per_positive=3, seed=9)
    third = sample_negatives(dataset[1], dataset, other_seed, table)
    assert first != third


def test_sample_probability_is_full_pool_softmax(toy):
    # Even for the second negative (drawn after one removal), the
    # recorded probability is the softmax weight over the whole pool.
    dataset, table = toy
    config = SamplerConfig(pool_size=5, negatives_per_positive=5, seed=2)
    samples = sample_negatives(dataset[3], dataset, config, table)
    total = sum(s.sample_probability for s in samples)
    assert total == pytest.approx(1.0, abs=1e-9)


def test_sample_negatives_rejects_truth_text():
    # Two other pairs share the truth's exact response text; they must
    # never be emitted as negatives no matter how the draws land.
    dataset = _toy_dataset(["same", "same", "same", "other one", "other two"])
    rng = np.random.default_rng(1)
    entries = {w: rng.normal(size=3) for w in ["same", "other", "one", "two", "ctx"]}
    table = EmbeddingTable(entries)
    config = SamplerConfig(pool_size=4, negatives_per_positive=2, seed=0)
    for seed in range(10):
        samples = sample_negatives(
            dataset[0], dataset, SamplerConfig(pool_size=4,
                                               negatives_per_positive=2,
                                               seed=seed), table
        )
        assert all(s.negative_response != "same" for s in samples)


def test_sample_negatives_pool_exhausted():
    dataset = _toy_dataset(["same", "same"])
    rng = np.random.default_rng(1)
    table = EmbeddingTable({"same": rng.normal(size=3), "ctx": rng.normal(size=3)})
    config = SamplerConfig(pool_size=1, negatives_per_positive=1, seed=0)
    with pytest.raises(ValueError, match="pool exhausted"):
        sample_negatives(dataset[0], dataset, config, table)


def test_sample_negatives_uniform(toy):
    dataset, table = toy
    config = SamplerConfig(pool_size=5, negatives_per_positive=2, seed=4)
    samples = sample_negatives_uniform(dataset[0], dataset, config)
    assert len(samples) == 2
    for s in samples:
        assert isinstance(s, NegativeSample)
        assert math.isnan(s.similarity_to_truth)
        assert s.sample_probability == pytest.approx(0.2)
        assert s.negative_response != dataset[0].response


def test_weighted_sampler_prefers_similar_responses(toy):
    # Aggregate draw counts must order by cosine to the truth: the
    # whole point of the weighted scheme is to oversample near misses.
    dataset, table = toy
    truth = dataset[0]
    from dialeval.embeddings import TableVectorSource, cosine

    source = TableVectorSource(table)
    truth_vec = source.vector_for(truth.id, "response", truth.response)
    sims = {
        p.response: cosine(
            truth_vec, source.vector_for(p.id, "response", p.response)
        )
        for p in dataset[1:]
    }
    counts = {text: 0 for text in sims}
    for seed in range(300):
        config = SamplerConfig(pool_size=5, temperature=0.07, seed=seed)
        for s in sample_negatives(truth, dataset, config, table):
            counts[s.negative_response] += 1
    most_similar = max(sims, key=sims.get)
    least_similar = min(sims, key=sims.get)
    assert counts[most_similar] > counts[least_similar]
    assert counts[most_similar] > 300 * 0.5
