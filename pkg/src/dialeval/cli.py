"""Command-line front door.

Subcommands:

* ``eval-reference``: score responses against references with one
  overlap or embedding metric.
* ``pone train`` / ``pone score``: train and apply the learned scorer,
  with ablation modes wiring the sampler / augmentor / filter on or off.
* ``correlate``: correlation between two per-pair score files, with
  permutation p-values.
* ``kappa``: inter-annotator agreement.
* ``augment eda`` / ``augment import``: produce augmented-variant files.
* ``sample-negatives``: audit dump of weighted negative samples.

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
Every command accepts ``--seed``; unset, the ``DIALEVAL_SEED``
environment variable is used, then 0.  All randomness flows from that
single seed, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import stats
from .augmentor import (
    EdaConfig,
    OPERATIONS,
    SynonymLexicon,
    augment_pairs,
    load_external_candidates,
)
from .corpus import (
    DialoguePair,
    FormatError,
    flatten_context,
    load_annotations,
    load_pairs,
    tokenize,
    write_pairs_jsonl,
)
from .embedding_metrics import (
    embedding_average,
    bertscore_f1,
    greedy_matching,
    vector_extrema,
)
from .embeddings import (
    EmbeddingTable,
    PrecomputedEmbeddingStore,
    StoreVectorSource,
    TableVectorSource,
    load_word_vectors,
)
from .label_filter import FilterConfig, filter_iterate, pretrain
from .negative_sampler import (
    SamplerConfig,
    sample_negatives,
    sample_negatives_uniform,
)
from .overlap_metrics import bleu, meteor, rouge_l
from .rng import derive_seed
from .scorer import ScorerModel, TrainConfig, TrainingExample, train

CONFIG_DEFAULTS = {
    "k": 5,
    "t": 0.07,
    "h": 128,
    "epochs": 100,
    "learning_rate": 1e-3,
    "dropout": 0.5,
    "mlp_hidden": (256, 512, 128),
    "batch_size": 64,
    "alpha": 0.1,
    "negatives_per_positive": 1,
    "max_iterations": 10,
    "fine_tune_epochs": 20,
    "label_threshold": 0.5,
}

_OVERLAP_METRICS = ("bleu1", "bleu2", "bleu3", "bleu4", "rouge", "meteor")
_TABLE_METRICS = ("ea", "vx", "gm")
METRIC_CHOICES = (*_OVERLAP_METRICS, *_TABLE_METRICS, "bertscore")

TRAIN_MODES = ("full", "po-lf", "ne-lf", "ne")


def _parse_hidden(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise FormatError(f"bad mlp_hidden value {text!r}") from exc
    if not sizes:
        raise FormatError(f"bad mlp_hidden value {text!r}")
    return sizes


def load_config(path: str) -> dict:
    """Parse the flat key=value training config, applying defaults."""
    values = dict(CONFIG_DEFAULTS)
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"expected key=value, got {line!r}", lineno)
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in CONFIG_DEFAULTS:
                raise FormatError(f"unknown config key {key!r}", lineno)
            try:
                if key == "mlp_hidden":
                    values[key] = _parse_hidden(value)
                elif isinstance(CONFIG_DEFAULTS[key], int):
                    values[key] = int(value)
                else:
                    values[key] = float(value)
            except (ValueError, FormatError) as exc:
                raise FormatError(
                    f"bad value {value!r} for config key {key!r}", lineno
                ) from exc
    return values


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("DIALEVAL_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise FormatError(
                f"DIALEVAL_SEED must be an integer, got {env!r}"
            ) from exc
    return 0


def _emit(lines, out_path):
    text = "".join(line + "\n" for line in lines)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _emit_jsonl(records, out_path):
    _emit([json.dumps(rec, ensure_ascii=False) for rec in records], out_path)


def _fmt(value: float) -> str:
    return repr(float(value))


def _sidecar(out_path: str, name: str) -> str:
    return f"{out_path}.{name}.jsonl"


def _load_source(args):
    """Resolve --emb / --store into a vector source."""
    if getattr(args, "emb", None):
        return TableVectorSource(load_word_vectors(args.emb))
    if getattr(args, "store", None):
        return StoreVectorSource(PrecomputedEmbeddingStore.load(args.store))
    raise FormatError("one of --emb or --store is required")


# ---------------------------------------------------------------------------
# eval-reference


def _cmd_eval_reference(args) -> int:
    candidates = load_pairs(args.pairs)
    references = {p.id: p for p in load_pairs(args.refs)}
    metric = args.metric
    table = None
    if metric in _TABLE_METRICS:
        if not args.emb:
            raise FormatError(f"--metric {metric} requires --emb")
        table = load_word_vectors(args.emb)
    store = ref_store = None
    if metric == "bertscore":
        if not args.store or not args.ref_store:
            raise FormatError(
                "--metric bertscore requires --store and --ref-store"
            )
        store = PrecomputedEmbeddingStore.load(args.store)
        ref_store = PrecomputedEmbeddingStore.load(args.ref_store)
    synonyms = None
    if metric == "meteor" and args.synonyms:
        synonyms = SynonymLexicon.load(args.synonyms).entries

    rows = ["pair_id\tmetric\tvalue"]
    for pair in candidates:
        if pair.id not in references:
            raise FormatError(f"no reference for pair {pair.id!r}")
        ref = references[pair.id]
        cand_tokens = tokenize(pair.response)
        ref_tokens = tokenize(ref.response)
        if metric.startswith("bleu"):
            value = bleu(cand_tokens, ref_tokens, max_n=int(metric[-1]))
        elif metric == "rouge":
            value = rouge_l(cand_tokens, ref_tokens)
        elif metric == "meteor":
            value = meteor(cand_tokens, ref_tokens, synonyms)
        elif metric == "ea":
            value = embedding_average(cand_tokens, ref_tokens, table)
        elif metric == "vx":
            value = vector_extrema(cand_tokens, ref_tokens, table)
        elif metric == "gm":
            value = greedy_matching(cand_tokens, ref_tokens, table)
        else:
            _, cand_mat = store.token_matrix(f"{pair.id}/response")
            _, ref_mat = ref_store.token_matrix(f"{ref.id}/response")
            value = bertscore_f1(cand_mat, ref_mat)
        rows.append(f"{pair.id}\t{metric}\t{_fmt(value)}")
    _emit(rows, args.out)
    return 0


# ---------------------------------------------------------------------------
# pone train


def _pair_vectors(pairs, source):
    vq, vr = {}, {}
    for pair in pairs:
        vq[pair.id] = source.vector_for(
            pair.id, "context", flatten_context(pair.context)
        )
        vr[pair.id] = source.vector_for(pair.id, "response", pair.response)
    return vq, vr


def _response_text_vectors(pairs, source, vr):
    """Map response text -> vector, for looking up sampled negatives."""
    mapping = {}
    for pair in pairs:
        mapping.setdefault(pair.response, vr[pair.id])
    return mapping


def _variant_vector(source, pair_id: str, text: str):
    if isinstance(source, TableVectorSource):
        return source.vector_for(pair_id, "response", text)
    key = f"{pair_id}/response"
    if not source.store.has_vector(key):
        raise FormatError(
            f"store has no entry {key!r}; export vectors for the augmented"
            " pairs file first (augment eda --emit-pairs)"
        )
    return source.store.sentence_vector(key)


def _cmd_pone_train(args) -> int:
    seed = _resolve_seed(args)
    pairs = load_pairs(args.pairs)
    cfg = load_config(args.config)
    source = _load_source(args)
    mode = args.mode
    lexicon = (
        SynonymLexicon.load(args.synonyms)
        if args.synonyms
        else SynonymLexicon({})
    )

    sampler_cfg = SamplerConfig(
        pool_size=cfg["h"],
        temperature=cfg["t"],
        negatives_per_positive=cfg["negatives_per_positive"],
        seed=seed,
    )
    train_cfg = TrainConfig(
        epochs=cfg["epochs"],
        learning_rate=cfg["learning_rate"],
        batch_size=cfg["batch_size"],
        dropout=cfg["dropout"],
        hidden_sizes=cfg["mlp_hidden"],
        seed=seed,
    )

    vq, vr = _pair_vectors(pairs, source)
    text_vectors = _response_text_vectors(pairs, source, vr)

    positives = [
        TrainingExample(f"{p.id}:pos", vq[p.id], vr[p.id], 1.0) for p in pairs
    ]

    weighted = mode in ("full", "po-lf")
    negatives = []
    audit = []
    for pair in pairs:
        if weighted:
            negs = sample_negatives(pair, pairs, sampler_cfg, source)
            audit.extend(negs)
        else:
            negs = sample_negatives_uniform(pair, pairs, sampler_cfg)
        for j, neg in enumerate(negs):
            negatives.append(
                TrainingExample(
                    f"{pair.id}:neg{j}",
                    vq[pair.id],
                    text_vectors[neg.negative_response],
                    0.0,
                )
            )

    augmented = []
    if mode != "po-lf":
        if args.augmented:
            candidates = load_external_candidates(args.augmented, cfg["k"])
            missing = [p.id for p in pairs if p.id not in candidates]
            if missing:
                raise FormatError(
                    f"candidates file lacks entries for {len(missing)}"
                    f" pairs (first: {missing[0]!r})"
                )
            sets = [candidates[p.id] for p in pairs]
        else:
            eda_cfg = EdaConfig(k=cfg["k"], alpha=cfg["alpha"], seed=seed)
            sets = augment_pairs(pairs, eda_cfg, lexicon)
        for aset in sets:
            for j, text in enumerate(aset.variants):
                sample_id = f"{aset.pair_id}#aug{j}"
                augmented.append(
                    TrainingExample(
                        sample_id,
                        vq[aset.pair_id],
                        _variant_vector(source, sample_id, text),
                        1.0,
                    )
                )

    use_filter = mode in ("full", "ne")
    state = None
    filter_trace = None
    if use_filter:
        filter_cfg = FilterConfig(
            max_iterations=cfg["max_iterations"],
            label_threshold=cfg["label_threshold"],
            fine_tune_epochs=cfg["fine_tune_epochs"],
        )
        model, losses = pretrain(positives, negatives, train_cfg)
        model, state, filter_trace = filter_iterate(
            positives,
            negatives,
            augmented,
            filter_cfg,
            train_cfg,
            model=model,
        )
    else:
        model, losses = train([*positives, *augmented, *negatives], train_cfg)

    model.save(args.out)
    _emit_jsonl(
        [{"epoch": i + 1, "loss": loss} for i, loss in enumerate(losses)],
        _sidecar(args.out, "train_trace"),
    )
    if weighted:
        _emit_jsonl(
            [
                {
                    "pair_id": rec.pair_id,
                    "negative_response": rec.negative_response,
                    "similarity_to_truth": rec.similarity_to_truth,
                    "sample_probability": rec.sample_probability,
                }
                for rec in audit
            ],
            _sidecar(args.out, "sampler_audit"),
        )
    if use_filter:
        _emit_jsonl(filter_trace, _sidecar(args.out, "filter_trace"))
        _emit_jsonl(
            [
                {"sample_id": sid, "label": label}
                for sid, label in state.labels.items()
            ],
            _sidecar(args.out, "pseudo_labels"),
        )
    return 0


# ---------------------------------------------------------------------------
# pone score


def _cmd_pone_score(args) -> int:
    model = ScorerModel.load(args.model)
    pairs = load_pairs(args.pairs)
    source = _load_source(args)
    if source.dim != model.dim:
        raise FormatError(
            f"model dim {model.dim} does not match embedding dim {source.dim}"
        )
    rows = ["pair_id\tscore"]
    if pairs:
        vq, vr = _pair_vectors(pairs, source)
        scores = model.score_batch(
            np.stack([vq[p.id] for p in pairs]),
            np.stack([vr[p.id] for p in pairs]),
        )
        for pair, score in zip(pairs, scores):
            rows.append(f"{pair.id}\t{_fmt(score)}")
    _emit(rows, args.out)
    return 0


# ---------------------------------------------------------------------------
# correlate / kappa


def _read_scores(path: str) -> dict[str, float]:
    """Read a per-pair score TSV: 2 columns, or 3 with a metric column."""
    scores: dict[str, float] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) == 2:
                pair_id, value_text = cols
            elif len(cols) == 3:
                pair_id, _, value_text = cols
            else:
                raise FormatError(
                    f"expected 2 or 3 columns, got {len(cols)}", lineno
                )
            try:
                value = float(value_text)
            except ValueError:
                if lineno == 1:
                    continue
                raise FormatError(
                    f"bad score {value_text!r}", lineno
                ) from None
            if pair_id in scores:
                raise FormatError(f"duplicate pair id {pair_id!r}", lineno)
            scores[pair_id] = value
    if not scores:
        raise FormatError(f"no scores found in {path}")
    return scores


def _cmd_correlate(args) -> int:
    seed = _resolve_seed(args)
    scores_a = _read_scores(args.scores_a)
    scores_b = _read_scores(args.scores_b)
    shared = sorted(set(scores_a) & set(scores_b))
    if len(shared) < 3:
        raise FormatError(
            f"score files share only {len(shared)} pair ids; need >= 3"
        )
    x = np.array([scores_a[p] for p in shared])
    y = np.array([scores_b[p] for p in shared])
    wanted = ("pearson", "spearman") if args.stat == "both" else (args.stat,)
    rows = ["statistic\tvalue\tp\tn"]
    for name in wanted:
        value = stats.pearson(x, y) if name == "pearson" else stats.spearman(x, y)
        p = stats.permutation_p_value(
            x, y, statistic=name, n_perms=args.n_perms,
            seed=derive_seed(seed, "corr", name),
        )
        rows.append(f"{name}\t{_fmt(value)}\t{_fmt(p)}\t{len(shared)}")
    _emit(rows, args.out)
    return 0


def _cmd_kappa(args) -> int:
    annotations = load_annotations(args.annotations)
    if args.statistic == "fleiss":
        value = stats.fleiss_kappa(annotations, aspect=args.aspect)
        name = "fleiss_kappa"
    else:
        value = stats.cohen_kappa(annotations, aspect=args.aspect)
        name = "cohen_kappa"
    n = sum(1 for ann in annotations if ann.scores(args.aspect))
    rows = ["statistic\tvalue\tn", f"{name}\t{_fmt(value)}\t{n}"]
    _emit(rows, args.out)
    return 0


# ---------------------------------------------------------------------------
# augment / sample-negatives


def _augmented_record(aset) -> dict:
    return {
        "pair_id": aset.pair_id,
        "original": aset.original,
        "variants": list(aset.variants),
        "provenance": aset.provenance,
    }


def _cmd_augment_eda(args) -> int:
    seed = _resolve_seed(args)
    pairs = load_pairs(args.input)
    lexicon = (
        SynonymLexicon.load(args.synonyms)
        if args.synonyms
        else SynonymLexicon({})
    )
    operations = OPERATIONS
    if args.operations:
        operations = tuple(
            op.strip() for op in args.operations.split(",") if op.strip()
        )
    config = EdaConfig(
        k=args.k, alpha=args.alpha, operations=operations, seed=seed
    )
    sets = augment_pairs(pairs, config, lexicon)
    _emit_jsonl([_augmented_record(s) for s in sets], args.out)
    if args.emit_pairs:
        by_id = {p.id: p for p in pairs}
        expanded = []
        for aset in sets:
            base = by_id[aset.pair_id]
            for j, text in enumerate(aset.variants):
                expanded.append(
                    DialoguePair(
                        id=f"{aset.pair_id}#aug{j}",
                        context=base.context,
                        response=text,
                        source="augmented",
                    )
                )
        write_pairs_jsonl(expanded, args.emit_pairs)
    return 0


def _cmd_augment_import(args) -> int:
    sets = load_external_candidates(args.candidates, args.k)
    _emit_jsonl([_augmented_record(s) for s in sets.values()], args.out)
    return 0


def _cmd_sample_negatives(args) -> int:
    seed = _resolve_seed(args)
    pairs = load_pairs(args.pairs)
    source = _load_source(args)
    config = SamplerConfig(
        pool_size=args.h,
        temperature=args.t,
        negatives_per_positive=args.n,
        seed=seed,
    )
    records = []
    for pair in pairs:
        for rec in sample_negatives(pair, pairs, config, source):
            records.append(
                {
                    "pair_id": rec.pair_id,
                    "negative_response": rec.negative_response,
                    "similarity_to_truth": rec.similarity_to_truth,
                    "sample_probability": rec.sample_probability,
                }
            )
    _emit_jsonl(records, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_seed(parser):
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="root seed (default: DIALEVAL_SEED env var, then 0)",
    )


def _add_vectors(parser, required=True):
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--emb", help="word-vector text file")
    group.add_argument("--store", help="precomputed embedding store (JSONL)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dialeval",
        description="Dialogue response evaluation metrics and scorer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "eval-reference", help="score responses against references"
    )
    p.add_argument("--metric", required=True, choices=METRIC_CHOICES)
    p.add_argument("--pairs", required=True, help="candidate pairs file")
    p.add_argument("--refs", required=True, help="reference pairs file")
    p.add_argument("--emb")
    p.add_argument("--store", help="token-matrix store for candidates")
    p.add_argument("--ref-store", help="token-matrix store for references")
    p.add_argument("--synonyms", help="synonym lexicon TSV (meteor only)")
    p.add_argument("--out")
    _add_seed(p)
    p.set_defaults(func=_cmd_eval_reference)

    pone = sub.add_parser("pone", help="learned scorer commands")
    pone_sub = pone.add_subparsers(dest="pone_command", required=True)

    p = pone_sub.add_parser("train", help="train the scorer")
    p.add_argument("--pairs", required=True)
    _add_vectors(p)
    p.add_argument("--config", required=True, help="key=value config file")
    p.add_argument("--mode", required=True, choices=TRAIN_MODES)
    p.add_argument("--out", required=True, help="model JSON output path")
    p.add_argument("--synonyms", help="synonym lexicon TSV for augmentation")
    p.add_argument(
        "--augmented",
        help="externally generated candidates JSONL; replaces built-in"
        " augmentation",
    )
    _add_seed(p)
    p.set_defaults(func=_cmd_pone_train)

    p = pone_sub.add_parser("score", help="score pairs with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True)
    _add_vectors(p)
    p.add_argument("--out")
    _add_seed(p)
    p.set_defaults(func=_cmd_pone_score)

    p = sub.add_parser("correlate", help="correlate two score files")
    p.add_argument("--scores-a", required=True)
    p.add_argument("--scores-b", required=True)
    p.add_argument(
        "--stat", default="both", choices=("both", "pearson", "spearman")
    )
    p.add_argument("--n-perms", type=int, default=1000)
    p.add_argument("--out")
    _add_seed(p)
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("kappa", help="inter-annotator agreement")
    p.add_argument("--annotations", required=True)
    p.add_argument("--aspect", default="overall")
    p.add_argument(
        "--statistic", default="fleiss", choices=("fleiss", "cohen")
    )
    p.add_argument("--out")
    _add_seed(p)
    p.set_defaults(func=_cmd_kappa)

    augment = sub.add_parser("augment", help="augmented-variant files")
    augment_sub = augment.add_subparsers(dest="augment_command", required=True)

    p = augment_sub.add_parser("eda", help="edit-based augmentation")
    p.add_argument("--input", required=True, help="pairs file")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--synonyms", help="synonym lexicon TSV")
    p.add_argument(
        "--operations", help="comma list restricting the edit operations"
    )
    p.add_argument(
        "--emit-pairs",
        help="also write variants as a pairs file (ids <pair>#aug<j>)",
    )
    p.add_argument("--out")
    _add_seed(p)
    p.set_defaults(func=_cmd_augment_eda)

    p = augment_sub.add_parser("import", help="ingest generator candidates")
    p.add_argument("--candidates", required=True, help="candidates JSONL")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out")
    _add_seed(p)
    p.set_defaults(func=_cmd_augment_import)

    p = sub.add_parser(
        "sample-negatives", help="emit weighted negative samples"
    )
    p.add_argument("--pairs", required=True)
    _add_vectors(p)
    p.add_argument("--h", type=int, default=128, help="candidate pool size")
    p.add_argument("--t", type=float, default=0.07, help="softmax temperature")
    p.add_argument("--n", type=int, default=1, help="negatives per pair")
    p.add_argument("--out")
    _add_seed(p)
    p.set_defaults(func=_cmd_sample_negatives)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"dialeval: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, KeyError, ValueError) as exc:
        print(f"dialeval: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"dialeval: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
