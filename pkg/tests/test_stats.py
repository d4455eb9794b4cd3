import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialeval.corpus import AnnotationSet, Rating
from dialeval.stats import (
    average_ranks,
    cohen_kappa,
    fleiss_kappa,
    human_agreement,
    pearson,
    permutation_p_value,
    spearman,
)


def test_pearson_known_values():
    assert pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_pearson_shift_and_scale_invariant():
    rng = np.random.default_rng(0)
    x = rng.normal(size=50)
    y = rng.normal(size=50)
    base = pearson(x, y)
    assert pearson(3 * x + 7, 0.5 * y - 2) == pytest.approx(base)
    assert pearson(-x, y) == pytest.approx(-base)


def test_paired_input_validation():
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2])
    with pytest.raises(ValueError):
        pearson([1, 2, 3], [1, 2])
    with pytest.raises(ValueError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson([1, 2, float("nan")], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson(np.ones((3, 1)), np.ones((3, 1)))


def test_average_ranks():
    np.testing.assert_array_equal(
        average_ranks([10.0, 20.0, 20.0, 30.0]), [1.0, 2.5, 2.5, 4.0]
    )
    np.testing.assert_array_equal(average_ranks([5.0, 5.0, 5.0]), [2.0, 2.0, 2.0])
    np.testing.assert_array_equal(
        average_ranks([3.0, 1.0, 2.0]), [3.0, 1.0, 2.0]
    )


def test_spearman_known_value():
    assert spearman([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)
    assert spearman([1, 2, 3], [10, 200, 3000]) == pytest.approx(1.0)


def test_spearman_handles_ties():
    # With ties, spearman must equal pearson over tie-averaged ranks,
    # not the d^2 shortcut formula (which assumes distinct ranks).
    x = [1.0, 2.0, 2.0, 3.0, 4.0]
    y = [1.0, 1.0, 2.0, 2.0, 2.0]
    expected = pearson(average_ranks(x), average_ranks(y))
    assert spearman(x, y) == pytest.approx(expected, abs=1e-15)


@settings(deadline=None, max_examples=100)
@given(
    st.lists(
        st.floats(-100, 100, allow_nan=False).map(lambda v: round(v, 3)),
        min_size=3,
        max_size=20,
        unique=True,
    )
)
def test_spearman_invariant_under_monotone_transform(x):
    rng = np.random.default_rng(42)
    y = list(rng.normal(size=len(x)))
    if len(set(y)) < 2:
        return
    transformed = [np.exp(v / 50.0) for v in x]
    assert spearman(x, y) == pytest.approx(spearman(transformed, y), abs=1e-9)


def test_permutation_p_value_extremes():
    x = list(range(20))
    y = [2.0 * v + 1.0 for v in x]
    p = permutation_p_value(x, y, n_perms=1000, seed=0)
    # only a draw that reproduces a perfect ordering can tie |r| = 1
    assert p <= 2 / 1001
    rng = np.random.default_rng(1)
    noise_p = permutation_p_value(
        list(rng.normal(size=40)), list(rng.normal(size=40)), seed=0
    )
    assert noise_p > 0.05


def test_permutation_p_value_deterministic():
    rng = np.random.default_rng(2)
    x = list(rng.normal(size=15))
    y = list(rng.normal(size=15))
    p1 = permutation_p_value(x, y, statistic="spearman", seed=9)
    p2 = permutation_p_value(x, y, statistic="spearman", seed=9)
    assert p1 == p2
    assert permutation_p_value(x, y, statistic="spearman", seed=10) != p1


def test_permutation_p_value_validation():
    x = [1.0, 2.0, 3.0, 4.0]
    with pytest.raises(ValueError, match="unknown statistic"):
        permutation_p_value(x, x, statistic="kendall")
    with pytest.raises(ValueError, match="n_perms"):
        permutation_p_value(x, [1.0, 3.0, 2.0, 4.0], n_perms=99)


def _sets(rows):
    """rows: list of (pair_id, {annotator: raw_overall_score})."""
    return [
        AnnotationSet(
            pair_id,
            tuple(
                Rating(annotator, "overall", score)
                for annotator, score in sorted(scores.items())
            ),
        )
        for pair_id, scores in rows
    ]


def test_fleiss_kappa_perfect_agreement():
    sets = _sets([("p1", {"a": 1, "b": 1}), ("p2", {"a": 2, "b": 2})])
    assert fleiss_kappa(sets) == pytest.approx(1.0)


def test_fleiss_kappa_perfect_disagreement():
    sets = _sets([("p1", {"a": 1, "b": 2}), ("p2", {"a": 1, "b": 2})])
    assert fleiss_kappa(sets) == pytest.approx(-1.0)


def test_fleiss_kappa_single_category_degenerate():
    sets = _sets([("p1", {"a": 3, "b": 3}), ("p2", {"a": 3, "b": 3})])
    assert fleiss_kappa(sets) == 1.0


def test_fleiss_kappa_near_zero_under_random_ratings():
    rng = np.random.default_rng(6)
    sets = _sets(
        [
            (f"p{i}", {f"a{j}": int(rng.integers(1, 7)) for j in range(3)})
            for i in range(400)
        ]
    )
    assert abs(fleiss_kappa(sets)) < 0.05


def test_fleiss_kappa_input_validation():
    with pytest.raises(ValueError, match="no ratings"):
        fleiss_kappa(_sets([("p1", {"a": 1})]), aspect="fluency")
    with pytest.raises(ValueError, match="expected 2"):
        fleiss_kappa(
            _sets([("p1", {"a": 1, "b": 2}), ("p2", {"a": 1, "b": 2, "c": 3})])
        )
    with pytest.raises(ValueError, match="at least 2"):
        fleiss_kappa(_sets([("p1", {"a": 1}), ("p2", {"a": 2})]))


def test_cohen_kappa_known_values():
    perfect = _sets([("p1", {"a": 2, "b": 2}), ("p2", {"a": 5, "b": 5}), ("p3", {"a": 2, "b": 2})])
    assert cohen_kappa(perfect) == pytest.approx(1.0)
    # marginals uniform over two categories, observed agreement 1/2:
    # kappa = (0.5 - 0.5) / (1 - 0.5) = 0
    coin = _sets(
        [
            ("p1", {"a": 1, "b": 1}),
            ("p2", {"a": 1, "b": 2}),
            ("p3", {"a": 2, "b": 1}),
            ("p4", {"a": 2, "b": 2}),
        ]
    )
    assert cohen_kappa(coin) == pytest.approx(0.0)


def test_cohen_kappa_worked_example():
    # 50 items: 20 agree on 1, 15 agree on 2, 5 + 10 disagreements.
    rows = (
        [(f"q{i}", {"a": 1, "b": 1}) for i in range(20)]
        + [(f"r{i}", {"a": 1, "b": 2}) for i in range(5)]
        + [(f"s{i}", {"a": 2, "b": 1}) for i in range(10)]
        + [(f"t{i}", {"a": 2, "b": 2}) for i in range(15)]
    )
    # p_obs = 0.7, expected = 0.5 * 0.6 + 0.5 * 0.4 = 0.5
    assert cohen_kappa(_sets(rows)) == pytest.approx(0.4)


def test_cohen_kappa_requires_two_fixed_annotators():
    with pytest.raises(ValueError, match="exactly 2"):
        cohen_kappa(_sets([("p1", {"a": 1, "b": 2, "c": 3})]))
    with pytest.raises(ValueError, match="expected"):
        cohen_kappa(_sets([("p1", {"a": 1, "b": 2}), ("p2", {"a": 1, "c": 2})]))
    with pytest.raises(ValueError, match="no ratings"):
        cohen_kappa(_sets([("p1", {"a": 1, "b": 2})]), aspect="coherence")


def test_human_agreement_mean_and_max():
    # a1 and a2 move together (r = 1); a3 moves against both (r = -1).
    sets = _sets(
        [
            ("p1", {"a1": 1, "a2": 2, "a3": 4}),
            ("p2", {"a1": 2, "a2": 3, "a3": 3}),
            ("p3", {"a1": 3, "a2": 4, "a3": 2}),
            ("p4", {"a1": 4, "a2": 5, "a3": 1}),
        ]
    )
    mean, best = human_agreement(sets)
    assert best == pytest.approx(1.0)
    assert mean == pytest.approx((1.0 - 1.0 - 1.0) / 3)
    mean_s, best_s = human_agreement(sets, metric="spearman")
    assert best_s == pytest.approx(1.0)


def test_human_agreement_validation():
    with pytest.raises(ValueError, match="unknown metric"):
        human_agreement([], metric="kendall")
    with pytest.raises(ValueError, match="at least 2 annotators"):
        human_agreement(_sets([("p1", {"a": 1})]))
    few = _sets([("p1", {"a": 1, "b": 2}), ("p2", {"a": 2, "b": 3})])
    with pytest.raises(ValueError, match="share only 2"):
        human_agreement(few)
