"""Iterative pseudo-labeling of augmented responses.

Augmented variants are not trusted as positives outright.  A scorer is
pretrained on clean positives and negatives, then repeatedly applied to
the augmented samples: each gets a hard pseudo-label by thresholding its
score, the scorer is fine-tuned (warm start) on the union of clean and
pseudo-labeled data, and the loop repeats until the labels stop
changing or an iteration cap is hit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .rng import derive_seed
from .scorer import ScorerModel, TrainConfig, TrainingExample, train


@dataclass(frozen=True)
class FilterConfig:
    max_iterations: int = 10
    label_threshold: float = 0.5
    fine_tune_epochs: int = 20
    stop_on_fixpoint: bool = True
    drop_relabeled_negatives: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0.0 < self.label_threshold < 1.0:
            raise ValueError("label_threshold must be in (0, 1)")
        if self.fine_tune_epochs < 1:
            raise ValueError("fine_tune_epochs must be >= 1")


@dataclass(frozen=True)
class PseudoLabelState:
    iteration: int
    labels: dict[str, int]
    flips_last_round: int

    def positive_fraction(self) -> float:
        if not self.labels:
            return 0.0
        return sum(self.labels.values()) / len(self.labels)


def pretrain(positives, negatives, train_config: TrainConfig):
    """Train a fresh scorer on clean positives and negatives."""
    if not positives or not negatives:
        raise ValueError("pretraining needs both positives and negatives")
    return train([*positives, *negatives], train_config)


def assign_pseudo_labels(
    model: ScorerModel,
    augmented,
    threshold: float,
    previous: PseudoLabelState | None = None,
) -> PseudoLabelState:
    """Score augmented examples and threshold into hard 0/1 labels.

    Scores at exactly the threshold label positive.  Flips count label
    changes against ``previous``; with no previous state every sample
    counts as flipped, so an empty augmented set is an immediate
    fixpoint.
    """
    labels: dict[str, int] = {}
    if augmented:
        vq = np.stack([ex.context_vector for ex in augmented])
        vr = np.stack([ex.response_vector for ex in augmented])
        scores = model.score_batch(vq, vr)
        for ex, score in zip(augmented, scores):
            labels[ex.sample_id] = 1 if score >= threshold else 0
    if previous is None:
        flips = len(labels)
        iteration = 1
    else:
        flips = sum(
            1 for sid, lab in labels.items() if previous.labels.get(sid) != lab
        )
        iteration = previous.iteration + 1
    return PseudoLabelState(iteration=iteration, labels=labels, flips_last_round=flips)


def build_finetune_examples(
    positives, negatives, augmented, state: PseudoLabelState, drop_zero_labeled: bool = False
):
    """Clean examples plus augmented ones re-labeled by the filter.

    Augmented samples labeled 0 become weight-1 negatives unless
    ``drop_zero_labeled`` excludes them.
    """
    out = [*positives, *negatives]
    for ex in augmented:
        label = state.labels[ex.sample_id]
        if label == 0 and drop_zero_labeled:
            continue
        out.append(replace(ex, label=float(label), weight=1.0))
    return out


def filter_iterate(
    positives,
    negatives,
    augmented,
    filter_config: FilterConfig,
    train_config: TrainConfig,
    model: ScorerModel | None = None,
):
    """Run the full pretrain / pseudo-label / fine-tune loop.

    A caller that already pretrained a scorer can pass it as ``model``
    to skip the pretraining step.  Returns ``(model, state, trace)``
    where trace holds one dict per labeling round with iteration number,
    flip count, and the fraction of augmented samples currently labeled
    positive.
    """
    if model is None:
        model, _ = pretrain(positives, negatives, train_config)
    state: PseudoLabelState | None = None
    trace: list[dict] = []
    for _ in range(filter_config.max_iterations):
        state = assign_pseudo_labels(
            model, augmented, filter_config.label_threshold, state
        )
        trace.append(
            {
                "iteration": state.iteration,
                "flips": state.flips_last_round,
                "positive_fraction": state.positive_fraction(),
            }
        )
        if filter_config.stop_on_fixpoint and state.flips_last_round == 0:
            break
        examples = build_finetune_examples(
            positives,
            negatives,
            augmented,
            state,
            drop_zero_labeled=filter_config.drop_relabeled_negatives,
        )
        finetune_config = replace(
            train_config,
            epochs=filter_config.fine_tune_epochs,
            seed=derive_seed(train_config.seed, "finetune", state.iteration),
        )
        model, _ = train(examples, finetune_config, model=model)
    return model, state, trace
