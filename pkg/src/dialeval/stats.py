"""Correlation and agreement statistics for metric validation.

Correlations operate on paired float arrays; agreement coefficients
operate on the annotation containers from :mod:`dialeval.corpus` with
raw scores on the 1..6 integer scale (six categories).
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .corpus import normalize_score
from .rng import derive_rng

N_CATEGORIES = 6


def _paired_arrays(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"need equal-length 1-D arrays, got {x.shape} and {y.shape}")
    if x.shape[0] < 3:
        raise ValueError("need at least 3 paired observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("inputs must be finite")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("correlation undefined for a constant series")
    return x, y


def pearson(x, y) -> float:
    """Pearson product-moment correlation coefficient."""
    x, y = _paired_arrays(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    denom = np.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    return float(np.sum(dx * dy) / denom)


def average_ranks(x) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their rank range."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Rank correlation: Pearson over tie-averaged ranks."""
    x, y = _paired_arrays(x, y)
    return pearson(average_ranks(x), average_ranks(y))


_STATISTICS = {"pearson": pearson, "spearman": spearman}


def permutation_p_value(
    x, y, statistic: str = "pearson", n_perms: int = 1000, seed: int = 0
) -> float:
    """Two-sided permutation p-value for a correlation statistic.

    One side of the pairing is permuted ``n_perms`` times with a derived
    stream per permutation; the p-value uses the add-one estimator
    ``(1 + hits) / (1 + n_perms)`` so it is never exactly zero.
    """
    if statistic not in _STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}")
    if n_perms < 1000:
        raise ValueError(f"n_perms must be >= 1000, got {n_perms}")
    stat = _STATISTICS[statistic]
    x, y = _paired_arrays(x, y)
    observed = abs(stat(x, y))
    hits = 0
    for i in range(n_perms):
        perm = derive_rng(seed, "perm", i).permutation(y)
        if abs(stat(x, perm)) >= observed:
            hits += 1
    return (1 + hits) / (1 + n_perms)


def _category_table(annotation_sets, aspect: str) -> np.ndarray:
    """Items x categories count table from raw scores for one aspect.

    Every item must carry the same number of ratings for the aspect.
    """
    rows = []
    n_raters = None
    for ann in annotation_sets:
        scores = ann.scores(aspect)
        if not scores:
            continue
        if n_raters is None:
            n_raters = len(scores)
        elif len(scores) != n_raters:
            raise ValueError(
                f"pair {ann.pair_id!r} has {len(scores)} ratings for"
                f" {aspect!r}, expected {n_raters}"
            )
        counts = np.zeros(N_CATEGORIES, dtype=np.float64)
        for score in scores.values():
            counts[score - 1] += 1
        rows.append(counts)
    if not rows:
        raise ValueError(f"no ratings found for aspect {aspect!r}")
    if n_raters < 2:
        raise ValueError("agreement needs at least 2 ratings per item")
    return np.stack(rows)


def fleiss_kappa(annotation_sets, aspect: str = "overall") -> float:
    """Chance-corrected multi-rater agreement over six score categories.

    Perfect observed agreement returns 1.0 even when expected agreement
    is also 1 (all ratings in a single category).
    """
    table = _category_table(annotation_sets, aspect)
    n_items, _ = table.shape
    n_raters = table[0].sum()
    p_obs = ((table * table).sum(axis=1) - n_raters) / (n_raters * (n_raters - 1))
    mean_obs = float(p_obs.mean())
    proportions = table.sum(axis=0) / (n_items * n_raters)
    expected = float(np.sum(proportions * proportions))
    if expected >= 1.0:
        return 1.0
    return (mean_obs - expected) / (1.0 - expected)


def cohen_kappa(annotation_sets, aspect: str = "overall") -> float:
    """Chance-corrected agreement for exactly two annotators."""
    pairs = []
    annotators = None
    for ann in annotation_sets:
        scores = ann.scores(aspect)
        if not scores:
            continue
        ids = tuple(sorted(scores))
        if annotators is None:
            if len(ids) != 2:
                raise ValueError("cohen_kappa needs exactly 2 annotators")
            annotators = ids
        elif ids != annotators:
            raise ValueError(
                f"pair {ann.pair_id!r} rated by {ids}, expected {annotators}"
            )
        pairs.append((scores[annotators[0]], scores[annotators[1]]))
    if not pairs:
        raise ValueError(f"no ratings found for aspect {aspect!r}")
    table = np.zeros((N_CATEGORIES, N_CATEGORIES), dtype=np.float64)
    for a, b in pairs:
        table[a - 1, b - 1] += 1
    table /= table.sum()
    p_obs = float(np.trace(table))
    expected = float(np.sum(table.sum(axis=1) * table.sum(axis=0)))
    if expected >= 1.0:
        return 1.0
    return (p_obs - expected) / (1.0 - expected)


def human_agreement(
    annotation_sets, metric: str = "pearson", aspect: str = "overall"
) -> tuple[float, float]:
    """Mean and max pairwise correlation between annotators.

    For each annotator pair the correlation is computed over the pairs
    both rated (normalized scores).  Needs at least two annotators and
    at least 3 shared items per annotator pair.
    """
    if metric not in _STATISTICS:
        raise ValueError(f"unknown metric {metric!r}")
    stat = _STATISTICS[metric]
    by_annotator: dict[str, dict[str, float]] = {}
    for ann in annotation_sets:
        for annotator, score in ann.scores(aspect).items():
            by_annotator.setdefault(annotator, {})[ann.pair_id] = normalize_score(
                score
            )
    annotators = sorted(by_annotator)
    if len(annotators) < 2:
        raise ValueError("human agreement needs at least 2 annotators")
    values = []
    for a, b in combinations(annotators, 2):
        shared = sorted(set(by_annotator[a]) & set(by_annotator[b]))
        if len(shared) < 3:
            raise ValueError(
                f"annotators {a!r} and {b!r} share only {len(shared)} rated pairs"
            )
        xs = [by_annotator[a][p] for p in shared]
        ys = [by_annotator[b][p] for p in shared]
        values.append(stat(xs, ys))
    return float(np.mean(values)), float(np.max(values))
