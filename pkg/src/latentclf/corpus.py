"""Dataset ingestion, vocabulary construction, encoding, and splits.

Input files follow the common quoted-CSV classification layout: each
record is a 1-based class index followed by one or more text fields, all
double-quoted, with ``""`` escaping quotes inside fields and literal
two-character ``\\n`` sequences standing in for newlines.

All types here are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

import csv
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

UNK_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_TOKEN = "<unk>"
BOS_TOKEN = "<s>"
EOS_TOKEN = "</s>"

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


class CsvFormatError(ValueError):
    """A record in the input CSV could not be parsed."""


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace with punctuation as separate tokens."""
    return _TOKEN_RE.findall(text.lower())


def load_csv(path, has_header: bool = False) -> list[tuple[int, str]]:
    """Read (label, text) pairs; labels converted from 1-based to 0-based.

    Multiple text fields are joined with a single space; literal ``\\n``
    sequences become spaces.
    """
    records: list[tuple[int, str]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for i, fields in enumerate(reader):
            if has_header and i == 0:
                continue
            if not fields:
                continue
            if len(fields) < 2:
                raise CsvFormatError(f"{path}: line {reader.line_num}: expected class and text fields")
            try:
                cls = int(fields[0])
            except ValueError:
                raise CsvFormatError(
                    f"{path}: line {reader.line_num}: non-integer class field {fields[0]!r}"
                ) from None
            if cls < 1:
                raise CsvFormatError(f"{path}: line {reader.line_num}: class index {cls} < 1")
            text = " ".join(fields[1:]).replace("\\n", " ")
            records.append((cls - 1, text))
    return records


@dataclass(frozen=True)
class Vocabulary:
    """Token/id bijection with reserved unknown, start, and end ids."""

    id_to_token: tuple[str, ...]
    token_to_id: dict[str, int] = field(repr=False)
    min_count: int = 1

    def __len__(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def decode(self, ids) -> list[str]:
        return [self.id_to_token[i] for i in ids]


def build_vocab(texts, min_count: int = 1) -> Vocabulary:
    """Vocabulary from the given texts only; rarer-than-min_count tokens drop to UNK.

    Retained tokens get ids from 3 upward, ordered by descending count and
    then alphabetically, so construction is deterministic.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts: Counter[str] = Counter()
    n_texts = 0
    for text in texts:
        n_texts += 1
        counts.update(tokenize(text))
    if n_texts == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted((t for t, c in counts.items() if c >= min_count),
                  key=lambda t: (-counts[t], t))
    id_to_token = (UNK_TOKEN, BOS_TOKEN, EOS_TOKEN, *kept)
    token_to_id = {t: i for i, t in enumerate(id_to_token) if i >= 3}
    return Vocabulary(id_to_token=id_to_token, token_to_id=token_to_id, min_count=min_count)


@dataclass(frozen=True)
class EncodedDocument:
    """Integer token ids bracketed by BOS/EOS, plus the gold label."""

    ids: tuple[int, ...]
    label: int


def encode(text: str, vocab: Vocabulary, max_tokens: int = 80, label: int = 0) -> EncodedDocument:
    """Tokenize, keep the first max_tokens tokens, map OOV to UNK, add BOS/EOS."""
    tokens = tokenize(text)[:max_tokens]
    ids = (BOS_ID, *(vocab.lookup(t) for t in tokens), EOS_ID)
    return EncodedDocument(ids=ids, label=label)


def subsample_per_class(pool: list[tuple[int, str]], n_per_class: int,
                        seed: int) -> list[tuple[int, str]]:
    """Exactly n_per_class records per class, sampled without replacement."""
    by_class: dict[int, list[int]] = {}
    for i, (label, _) in enumerate(pool):
        by_class.setdefault(label, []).append(i)
    rng = np.random.default_rng([seed, 0x5AB5])
    chosen: list[int] = []
    for label in sorted(by_class):
        indices = by_class[label]
        if len(indices) < n_per_class:
            raise ValueError(
                f"class {label} has only {len(indices)} instances, need {n_per_class}"
            )
        picked = rng.choice(len(indices), size=n_per_class, replace=False)
        chosen.extend(indices[j] for j in picked)
    return [pool[i] for i in sorted(chosen)]


def split_dev(pool: list[tuple[int, str]], dev_size: int = 5000,
              seed: int = 0) -> tuple[list[tuple[int, str]], list[tuple[int, str]]]:
    """Carve a development set out of the training pool, without replacement.

    If the pool is too small for the requested dev_size, dev_size falls
    back to 10% of the pool (with a warning) so small corpora still run.
    """
    n = len(pool)
    if n <= dev_size:
        dev_size = max(1, n // 10)
        warnings.warn(
            f"pool of {n} too small for requested dev split; using {dev_size} (10%)",
            stacklevel=2,
        )
    rng = np.random.default_rng([seed, 0xDE5])
    dev_idx = set(rng.choice(n, size=dev_size, replace=False).tolist())
    train = [rec for i, rec in enumerate(pool) if i not in dev_idx]
    dev = [pool[i] for i in sorted(dev_idx)]
    return train, dev


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint encoded train/dev/test splits plus label bookkeeping."""

    train: tuple[EncodedDocument, ...]
    dev: tuple[EncodedDocument, ...]
    test: tuple[EncodedDocument, ...]
    num_labels: int
    label_counts: tuple[int, ...]

    def __post_init__(self):
        if self.num_labels != len(self.label_counts):
            raise ValueError("label_counts must cover exactly num_labels labels")


def prepare_dataset(train_records: list[tuple[int, str]],
                    test_records: list[tuple[int, str]],
                    n_per_class: int | None,
                    seed: int,
                    dev_size: int = 5000,
                    min_count: int = 2,
                    max_tokens: int = 80) -> tuple[DatasetSplit, Vocabulary]:
    """Full pipeline: dev split, per-class subsample, vocab, and encoding.

    The dev split is drawn from the training pool before subsampling, so
    every training size shares one dev set per (dataset, seed).  The
    vocabulary is built from the selected training subset only; dev and
    test tokens outside it map to UNK.
    """
    labels = sorted({label for label, _ in train_records})
    num_labels = max(labels) + 1
    if labels != list(range(num_labels)):
        raise ValueError(f"labels {labels} do not cover 0..{num_labels - 1}")

    pool, dev_recs = split_dev(train_records, dev_size=dev_size, seed=seed)
    if n_per_class is not None:
        subset = subsample_per_class(pool, n_per_class, seed=seed)
    else:
        subset = pool
    vocab = build_vocab((text for _, text in subset), min_count=min_count)

    def enc(records):
        return tuple(encode(text, vocab, max_tokens=max_tokens, label=label)
                     for label, text in records)

    train = enc(subset)
    counts = [0] * num_labels
    for doc in train:
        counts[doc.label] += 1
    return (
        DatasetSplit(
            train=train,
            dev=enc(dev_recs),
            test=enc(test_records),
            num_labels=num_labels,
            label_counts=tuple(counts),
        ),
        vocab,
    )
