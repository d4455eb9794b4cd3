"""Command line entry point: read a pairs file, write an embedding store.

The output is JSONL: one header object carrying dim/pooling/layer plus
the truncation policy, then one sentence-vector entry per (pair, role)
and, with --tokens, one token-matrix entry per (pair, role).  The file
is written to a temp path in the same directory and renamed into place
so a crash never leaves a half-written store.
"""

import argparse
import json
import os
import sys
import tempfile

from .encoder import TURN_SEPARATOR, HashAttentionEncoder


class PairsError(ValueError):
    pass


def read_pairs(path: str) -> list[dict]:
    pairs = []
    seen = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PairsError(f"line {lineno}: bad JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise PairsError(f"line {lineno}: expected an object")
            for key in ("id", "context", "response"):
                if key not in obj:
                    raise PairsError(f"line {lineno}: missing {key!r}")
            if not isinstance(obj["id"], str) or not obj["id"]:
                raise PairsError(f"line {lineno}: id must be a non-empty string")
            if obj["id"] in seen:
                raise PairsError(f"line {lineno}: duplicate id {obj['id']!r}")
            seen.add(obj["id"])
            if not isinstance(obj["context"], list) or not all(
                isinstance(t, str) for t in obj["context"]
            ):
                raise PairsError(
                    f"line {lineno}: context must be a list of strings"
                )
            if not isinstance(obj["response"], str):
                raise PairsError(f"line {lineno}: response must be a string")
            pairs.append(obj)
    return pairs


def export(pairs, encoder, out_path: str, with_tokens: bool) -> None:
    header = {
        "dim": encoder.dim,
        "pooling": "mean",
        "layer": "last",
        "truncation": "tail",
        "max_tokens": encoder.max_tokens,
        "encoder": encoder.name,
    }
    out_dir = os.path.dirname(os.path.abspath(out_path))
    fd, tmp_path = tempfile.mkstemp(
        prefix=os.path.basename(out_path) + ".", suffix=".tmp", dir=out_dir
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(json.dumps(header) + "\n")
            for pair in pairs:
                texts = (
                    ("context", f" {TURN_SEPARATOR} ".join(pair["context"])),
                    ("response", pair["response"]),
                )
                for role, text in texts:
                    key = f"{pair['id']}/{role}"
                    tokens, matrix = encoder.encode(text)
                    vector = encoder.sentence_vector(matrix)
                    handle.write(
                        json.dumps({"key": key, "vector": vector.tolist()})
                        + "\n"
                    )
                    if with_tokens:
                        handle.write(
                            json.dumps(
                                {
                                    "key": key,
                                    "tokens": tokens,
                                    "matrix": matrix.tolist(),
                                }
                            )
                            + "\n"
                        )
        os.replace(tmp_path, out_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-exporter",
        description="Export sentence embeddings for a dialogue pairs file",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="write an embedding store")
    p.add_argument("--pairs", required=True, help="pairs JSONL file")
    p.add_argument("--out", required=True, help="output store path")
    p.add_argument(
        "--tokens", action="store_true",
        help="also write per-token matrices",
    )
    p.add_argument(
        "--model-name",
        help="transformers model to use instead of the built-in encoder",
    )
    p.add_argument("--dim", type=int, default=48,
                   help="built-in encoder width (ignored with --model-name)")
    p.add_argument("--max-tokens", type=int, default=128)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    if args.model_name:
        try:
            from .encoder import PretrainedEncoder

            encoder = PretrainedEncoder(args.model_name, args.max_tokens)
        except Exception as exc:
            print(
                f"error: could not load encoder {args.model_name!r}: {exc}",
                file=sys.stderr,
            )
            return 1
    else:
        try:
            encoder = HashAttentionEncoder(
                dim=args.dim, max_tokens=args.max_tokens
            )
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2

    try:
        pairs = read_pairs(args.pairs)
    except (PairsError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    export(pairs, encoder, args.out, args.tokens)
    return 0


def entry() -> None:
    sys.exit(main())
