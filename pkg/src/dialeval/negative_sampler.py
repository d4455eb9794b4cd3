"""Similarity-weighted negative response sampling.

For each pair, a fixed-size pool of other responses is drawn uniformly
from the dataset, a softmax over cosine similarities to the true
response (divided by a temperature) turns the pool into a distribution,
and negatives are drawn from it without replacement.  Responses whose
text equals the true response are rejected and redrawn so a sampled
negative is never the truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import as_vector_source, cosine
from .rng import derive_rng


@dataclass(frozen=True)
class SamplerConfig:
    pool_size: int = 128
    temperature: float = 0.07
    negatives_per_positive: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be > 0")
        if not 1 <= self.negatives_per_positive <= self.pool_size:
            raise ValueError(
                "negatives_per_positive must be in 1..pool_size"
            )


@dataclass(frozen=True)
class NegativeSample:
    pair_id: str
    negative_response: str
    similarity_to_truth: float
    sample_probability: float


def selection_probabilities(
    truth_vector: np.ndarray, candidate_vectors: np.ndarray, temperature: float
) -> np.ndarray:
    """Softmax over cosine(truth, candidate) / temperature.

    Numerically stabilised by max subtraction; always sums to 1.
    """
    if temperature <= 0.0:
        raise ValueError("temperature must be > 0")
    candidate_vectors = np.asarray(candidate_vectors, dtype=np.float64)
    if candidate_vectors.ndim != 2 or candidate_vectors.shape[0] == 0:
        raise ValueError("candidate_vectors must be a non-empty 2-D array")
    sims = np.array(
        [cosine(truth_vector, c) for c in candidate_vectors], dtype=np.float64
    )
    logits = sims / temperature
    logits -= logits.max()
    weights = np.exp(logits)
    return weights / weights.sum()


def weighted_draw(rng: np.random.Generator, probabilities: np.ndarray) -> int:
    """Draw one index from a probability vector via inverse CDF."""
    cum = np.cumsum(probabilities)
    u = rng.random() * cum[-1]
    return int(min(np.searchsorted(cum, u, side="right"), len(cum) - 1))


def draw_candidate_pool(dataset, exclude_id: str, pool_size: int, rng) -> list[str]:
    """Uniformly draw ``pool_size`` responses from other pairs."""
    return [
        dataset[i].response
        for i in _draw_pool_indices(dataset, exclude_id, pool_size, rng)
    ]


def _draw_pool_indices(dataset, exclude_id: str, pool_size: int, rng) -> np.ndarray:
    eligible = [i for i, pair in enumerate(dataset) if pair.id != exclude_id]
    if len(eligible) < pool_size:
        raise ValueError(
            f"dataset has only {len(eligible)} other pairs,"
            f" cannot draw a pool of {pool_size}"
        )
    chosen = rng.choice(len(eligible), size=pool_size, replace=False)
    return np.array([eligible[i] for i in chosen], dtype=np.int64)


def sample_negatives(pair, dataset, config: SamplerConfig, vectors) -> list[NegativeSample]:
    """Draw weighted negatives for one pair.

    ``vectors`` is an EmbeddingTable, a PrecomputedEmbeddingStore, or
    any object with ``vector_for(pair_id, role, text)``.  The recorded
    ``sample_probability`` is the softmax weight over the full pool, so
    probabilities across a pool sum to 1.
    """
    source = as_vector_source(vectors)
    rng = derive_rng(config.seed, "neg", pair.id)
    indices = _draw_pool_indices(dataset, pair.id, config.pool_size, rng)
    pool = [dataset[i] for i in indices]
    truth_vec = source.vector_for(pair.id, "response", pair.response)
    cand_vecs = np.stack(
        [source.vector_for(p.id, "response", p.response) for p in pool]
    )
    probs = selection_probabilities(truth_vec, cand_vecs, config.temperature)
    sims = np.array(
        [cosine(truth_vec, c) for c in cand_vecs], dtype=np.float64
    )
    remaining = list(range(len(pool)))
    samples: list[NegativeSample] = []
    while len(samples) < config.negatives_per_positive:
        if not remaining:
            raise ValueError(
                f"pair {pair.id!r}: candidate pool exhausted before"
                f" {config.negatives_per_positive} negatives were found"
            )
        sub = probs[remaining]
        pick = remaining.pop(weighted_draw(rng, sub / sub.sum()))
        if pool[pick].response == pair.response:
            continue
        samples.append(
            NegativeSample(
                pair_id=pair.id,
                negative_response=pool[pick].response,
                similarity_to_truth=float(sims[pick]),
                sample_probability=float(probs[pick]),
            )
        )
    return samples


def sample_negatives_uniform(pair, dataset, config: SamplerConfig) -> list[NegativeSample]:
    """Uniform-random negatives (the non-weighted baseline).

    Draws from the same per-pair stream layout as the weighted sampler;
    similarity and probability fields record the uniform pool weight.
    """
    rng = derive_rng(config.seed, "neg", pair.id)
    indices = _draw_pool_indices(dataset, pair.id, config.pool_size, rng)
    pool = [dataset[i] for i in indices]
    uniform = 1.0 / len(pool)
    remaining = list(range(len(pool)))
    samples: list[NegativeSample] = []
    while len(samples) < config.negatives_per_positive:
        if not remaining:
            raise ValueError(
                f"pair {pair.id!r}: candidate pool exhausted before"
                f" {config.negatives_per_positive} negatives were found"
            )
        pick = remaining.pop(int(rng.integers(len(remaining))))
        if pool[pick].response == pair.response:
            continue
        samples.append(
            NegativeSample(
                pair_id=pair.id,
                negative_response=pool[pick].response,
                similarity_to_truth=float("nan"),
                sample_probability=uniform,
            )
        )
    return samples
