"""Evaluation metrics and a learned relevance scorer for open-domain
dialogue responses.

Submodules: :mod:`corpus` (data types and file I/O), :mod:`embeddings`
(word vectors and stores), :mod:`overlap_metrics` and
:mod:`embedding_metrics` (reference metrics), :mod:`negative_sampler`,
:mod:`augmentor`, :mod:`scorer`, :mod:`label_filter` (the learned
metric's pipeline), :mod:`stats` (correlation and agreement), and
:mod:`cli`.
"""

__version__ = "0.1.0"
