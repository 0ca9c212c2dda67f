"""Shared fixtures: the published confusion matrix, a synthetic separable
corpus, and a session-scoped reduced encoder for training tests."""

from __future__ import annotations

import os
import random

import numpy as np
import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

from newsframes.codebook import FRAME_ORDER, FrameCode, LabelSet
from newsframes.corpus import Dataset, LabeledParagraph, Paragraph, make_dataset

# Published 5-fold CV confusion matrix, rows = actual and columns = predicted,
# both in canonical frame order (AR01, HI02, CF03, MF04, EF05, NO06).
FIGURE3 = np.array(
    [
        [534, 3, 2, 0, 0, 2],    # AR01 (support 541)
        [7, 772, 1, 0, 0, 0],    # HI02 (support 780)
        [2, 1, 76, 0, 1, 3],     # CF03 (support 83)
        [2, 3, 6, 0, 0, 3],      # MF04 (support 14)
        [0, 2, 0, 0, 361, 2],    # EF05 (support 365)
        [3, 3, 1, 0, 0, 946],    # NO06 (support 953)
    ],
    dtype=np.int64,
)

TABLE1_COUNTS = {
    FrameCode.AR01: 541,
    FrameCode.HI02: 780,
    FrameCode.CF03: 83,
    FrameCode.MF04: 14,
    FrameCode.EF05: 365,
    FrameCode.NO06: 953,
}

# Class-unique keyword pools for the synthetic, linearly separable corpus.
CLASS_KEYWORDS: dict[FrameCode, list[str]] = {
    FrameCode.AR01: ["minister", "blamed", "responsibility", "government", "reform"],
    FrameCode.HI02: ["grandmother", "tears", "family", "suffering", "hope"],
    FrameCode.CF03: ["clash", "dispute", "opponents", "accusations", "feud"],
    FrameCode.MF04: ["moral", "ethics", "sinful", "virtue", "decency"],
    FrameCode.EF05: ["budget", "costs", "pension", "taxes", "payout"],
    FrameCode.NO06: ["weather", "schedule", "notice", "timetable", "update"],
}

FILLER_PHRASES = [
    "the report said",
    "according to sources",
    "observers noted",
    "in the town",
    "on monday",
    "later that day",
    "officials stated",
    "as previously mentioned",
    "in a statement",
    "residents heard",
]


def synthetic_paragraph(code: FrameCode, rng: random.Random) -> str:
    """A templated paragraph dominated by one class's keywords.

    Five keyword insertions keep the classes cleanly separable for the
    fixed-hyperparameter learnability checks.
    """
    words: list[str] = []
    for _ in range(5):
        words.append(rng.choice(CLASS_KEYWORDS[code]))
        words.extend(rng.choice(FILLER_PHRASES).split())
    rng.shuffle(words)
    return " ".join(words)


def make_keyword_corpus(
    per_class: int = 100, seed: int = 13, split: str = "train"
) -> Dataset:
    """Synthetic separable dataset: per_class paragraphs for each frame."""
    rng = random.Random(seed)
    records = []
    for code in FRAME_ORDER:
        for i in range(per_class):
            doc_id = f"doc-{code.value}-{i:03d}"
            text = synthetic_paragraph(code, rng)
            records.append(
                LabeledParagraph(
                    paragraph=Paragraph(
                        para_id=f"{doc_id}#p0", doc_id=doc_id, ordinal=0, text=text
                    ),
                    labels=LabelSet(frames=[code], main=code),
                    coder_id="synthetic",
                    split=split,
                )
            )
    return make_dataset(records, split=split)


def corpus_vocabulary_texts() -> list[str]:
    """All words the synthetic generator can produce, for vocab building."""
    words = set()
    for pool in CLASS_KEYWORDS.values():
        words.update(pool)
    for phrase in FILLER_PHRASES:
        words.update(phrase.split())
    return [" ".join(sorted(words))]


@pytest.fixture(scope="session")
def figure3_matrix():
    from newsframes.evaluate import ConfusionMatrix

    return ConfusionMatrix(FIGURE3.copy())


@pytest.fixture(scope="session")
def figure3_csv(tmp_path_factory, figure3_matrix):
    from newsframes.evaluate import save_confusion_csv

    path = tmp_path_factory.mktemp("cm") / "figure3.csv"
    save_confusion_csv(figure3_matrix, path)
    return path


@pytest.fixture(scope="session")
def reduced_encoder(tmp_path_factory):
    """Offline stand-in for the pretrained encoder (hidden 512, 2 layers)."""
    from newsframes.train import build_reduced_encoder

    out = tmp_path_factory.mktemp("encoder") / "reduced"
    return build_reduced_encoder(corpus_vocabulary_texts(), out)


@pytest.fixture(scope="session")
def tiny_encoder(tmp_path_factory):
    """Smallest loadable encoder, for tests that only count steps."""
    from newsframes.train import build_reduced_encoder

    out = tmp_path_factory.mktemp("encoder") / "tiny"
    return build_reduced_encoder(
        corpus_vocabulary_texts(), out, hidden_size=32, num_hidden_layers=1,
        num_attention_heads=2,
    )


@pytest.fixture(scope="session")
def trained_artifact(tmp_path_factory, tiny_encoder):
    """A quick real fine-tune, shared by prediction/CLI tests."""
    from newsframes.train import TrainingConfig, fine_tune

    ds = make_keyword_corpus(per_class=8, seed=5)
    config = TrainingConfig(
        seed=11,
        output_dir=str(tmp_path_factory.mktemp("artifact") / "model"),
        pretrained_encoder_id=tiny_encoder,
        epochs=1,
    )
    artifact, log = fine_tune(config, ds)
    return artifact
