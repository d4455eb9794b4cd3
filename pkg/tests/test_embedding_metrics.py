import math
import warnings

import numpy as np
import pytest

from dialeval.embedding_metrics import (
    bertscore_f1,
    embedding_average,
    greedy_matching,
    token_matrix,
    vector_extrema,
)
from dialeval.embeddings import EmbeddingTable, ZeroNormWarning


@pytest.fixture
def table():
    return EmbeddingTable(
        {
            "a": [1.0, 0.0],
            "b": [0.0, 2.0],
            "c": [-3.0, 0.0],
            "d": [0.0, 1.0],
        }
    )


def test_token_matrix(table):
    mat = token_matrix(["a", "b", "missing"], table)
    np.testing.assert_array_equal(
        mat, [[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]]
    )
    with pytest.raises(ValueError):
        token_matrix([], table)


def test_embedding_average_known_value(table):
    # means: [0.5, 1.0] vs [1.0, 0.0] -> cosine 1/sqrt(5)
    value = embedding_average(["a", "b"], ["a"], table)
    assert value == pytest.approx(1 / math.sqrt(5))


def test_embedding_average_identity(table):
    assert embedding_average(["a", "b"], ["a", "b"], table) == pytest.approx(1.0)


def test_embedding_average_all_oov_warns(table):
    with pytest.warns(ZeroNormWarning):
        value = embedding_average(["zzz"], ["a"], table)
    assert value == 0.0


def test_vector_extrema_known_value(table):
    # extremes: ["a","b"] -> [1, 2]; ["c","b"] -> [-3, 2]
    # cosine = (-3 + 4) / (sqrt(5) * sqrt(13)) = 1/sqrt(65)
    value = vector_extrema(["a", "b"], ["c", "b"], table)
    assert value == pytest.approx(1 / math.sqrt(65))


def test_vector_extrema_keeps_sign_of_largest_magnitude(table):
    # "c" = [-3, 0] dominates dimension 0, so the extreme stays negative
    value = vector_extrema(["a", "c"], ["c"], table)
    assert value == pytest.approx(1.0)


def test_greedy_matching_known_value(table):
    # forward: mean(max cos) over ["a","d"] vs ["a"] = (1 + 0)/2 = 0.5
    # backward: ["a"] vs ["a","d"] = 1.0
    value = greedy_matching(["a", "d"], ["a"], table)
    assert value == pytest.approx(0.75)


def test_greedy_matching_symmetric(table):
    ab = greedy_matching(["a", "b"], ["c", "d"], table)
    ba = greedy_matching(["c", "d"], ["a", "b"], table)
    assert ab == pytest.approx(ba)


def test_greedy_matching_scale_invariant(table):
    # "b" and "d" point the same way with different norms; rows are
    # normalised before matching so the result is identical.
    assert greedy_matching(["a", "b"], ["a"], table) == pytest.approx(
        greedy_matching(["a", "d"], ["a"], table)
    )


def test_bertscore_known_value():
    cand = np.array([[1.0, 0.0], [0.0, 1.0]])
    ref = np.array([[1.0, 0.0]])
    # precision (1 + 0)/2, recall 1 -> F1 = 2/3
    assert bertscore_f1(cand, ref) == pytest.approx(2 / 3)


def test_bertscore_identity():
    rng = np.random.default_rng(0)
    mat = rng.normal(size=(5, 8))
    assert bertscore_f1(mat, mat) == pytest.approx(1.0)


def test_bertscore_nonpositive_precision_or_recall_is_zero():
    assert bertscore_f1(np.array([[1.0, 0.0]]), np.array([[-1.0, 0.0]])) == 0.0
    assert (
        bertscore_f1(
            np.array([[1.0, 0.0], [-1.0, 0.0]]), np.array([[0.0, 1.0]])
        )
        == 0.0
    )


def test_bertscore_row_scale_invariance():
    cand = np.array([[3.0, 0.0], [0.0, 0.5]])
    ref = np.array([[1.0, 1.0]])
    scaled = bertscore_f1(cand * 10.0, ref * 0.1)
    assert bertscore_f1(cand, ref) == pytest.approx(scaled)


def test_bertscore_validation():
    good = np.ones((2, 3))
    with pytest.raises(ValueError, match="2-D"):
        bertscore_f1(np.ones(3), good)
    with pytest.raises(ValueError, match="at least one row"):
        bertscore_f1(np.ones((0, 3)), good)
    with pytest.raises(ValueError, match="dim mismatch"):
        bertscore_f1(np.ones((2, 4)), good)


def test_all_metrics_bounded_on_random_inputs(table):
    rng = np.random.default_rng(11)
    vocab = ["a", "b", "c", "d", "oov"]
    for _ in range(50):
        cand = list(rng.choice(vocab, size=rng.integers(1, 6)))
        ref = list(rng.choice(vocab, size=rng.integers(1, 6)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ZeroNormWarning)
            values = [
                embedding_average(cand, ref, table),
                vector_extrema(cand, ref, table),
                greedy_matching(cand, ref, table),
            ]
        for value in values:
            assert -1.0 - 1e-12 <= value <= 1.0 + 1e-12
