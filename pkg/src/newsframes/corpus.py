"""Document ingestion, paragraph extraction, and labeled-dataset persistence.

Source documents arrive as plain text or raw markup. They are split into
paragraph units (the unit of coding), optionally run through a pluggable
translation client, and stored as JSONL datasets whose records carry the
frame labels assigned by human coders.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, replace
from html.parser import HTMLParser
from pathlib import Path
from typing import Iterable, Protocol

from .codebook import FrameCode, LabelSet, parse_frame_code, require_valid

#: Blocks shorter than this many characters are dropped during extraction
#: (navigation fragments, bylines, social buttons). The threshold is a named
#: constant so it can be tuned per corpus.
DEFAULT_MIN_PARAGRAPH_CHARS = 40

DATASET_SPLITS = ("train", "gold", "mixed")


class IngestionError(ValueError):
    """Document cannot be split into paragraphs (e.g. empty body)."""


class TranslationError(RuntimeError):
    """Translation backend failed for a document."""

    def __init__(self, doc_id: str, reason: str):
        self.doc_id = doc_id
        super().__init__(f"translation failed for document {doc_id!r}: {reason}")


class DatasetParseError(ValueError):
    """A dataset file line does not conform to the JSONL schema."""

    def __init__(self, path, line_no: int, reason: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {reason}")


class SamplingError(ValueError):
    """Requested sample size exceeds the corpus size."""


class LeakageError(RuntimeError):
    """Gold and train splits share documents or paragraphs."""


@dataclass(frozen=True)
class SourceDocument:
    """One crawled page: identifier, provenance URL, language, and body text."""

    doc_id: str
    url: str
    language: str
    body: str


@dataclass(frozen=True)
class Paragraph:
    """A single paragraph with its position within the source document."""

    para_id: str
    doc_id: str
    ordinal: int
    text: str


@dataclass(frozen=True)
class LabeledParagraph:
    """A paragraph plus the coder's labels and its dataset split."""

    paragraph: Paragraph
    labels: LabelSet
    coder_id: str
    split: str  # "train" | "gold"


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of labeled paragraphs with unique para_ids."""

    records: tuple[LabeledParagraph, ...]
    split: str  # "train" | "gold" | "mixed"

    def __post_init__(self):
        seen = set()
        for record in self.records:
            pid = record.paragraph.para_id
            if pid in seen:
                raise ValueError(f"duplicate para_id in dataset: {pid!r}")
            seen.add(pid)
        if self.split not in DATASET_SPLITS:
            raise ValueError(f"unknown dataset split: {self.split!r}")
        if self.split in ("train", "gold"):
            for record in self.records:
                if record.split != self.split:
                    raise ValueError(
                        f"record {record.paragraph.para_id!r} has split "
                        f"{record.split!r} in a {self.split!r} dataset"
                    )

    def __len__(self) -> int:
        return len(self.records)

    def texts(self) -> list[str]:
        return [r.paragraph.text for r in self.records]

    def main_frames(self) -> list[FrameCode]:
        return [r.labels.main for r in self.records]

    def doc_ids(self) -> set[str]:
        return {r.paragraph.doc_id for r in self.records}


def make_dataset(records: Iterable[LabeledParagraph], split: str | None = None) -> Dataset:
    """Build a Dataset, inferring the split tag when not given."""
    records = tuple(records)
    if split is None:
        tags = {r.split for r in records}
        split = tags.pop() if len(tags) == 1 else "mixed"
    return Dataset(records=records, split=split)


class TranslationClient(Protocol):
    """Behavior contract for machine-translation backends."""

    def translate(self, text: str, source_language: str) -> str:
        """Return the English translation of ``text``."""
        ...


class IdentityTranslation:
    """Backend that returns the input unchanged; the default for tests."""

    def translate(self, text: str, source_language: str) -> str:
        return text


# ---------------------------------------------------------------------------
# paragraph extraction

_BLOCK_TAGS = frozenset(
    "p div article section h1 h2 h3 h4 h5 h6 li blockquote td th dd dt "
    "figcaption pre br".split()
)
_SKIP_TAGS = frozenset({"script", "style", "noscript", "template"})


class _BlockSplitter(HTMLParser):
    """Flushes accumulated text whenever a block-level boundary is crossed."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.blocks: list[str] = []
        self._buffer: list[str] = []
        self._skip_depth = 0

    def _flush(self):
        text = normalize_whitespace("".join(self._buffer))
        if text:
            self.blocks.append(text)
        self._buffer = []

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag in _BLOCK_TAGS:
            self._flush()

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag in _BLOCK_TAGS:
            self._flush()

    def handle_data(self, data):
        if not self._skip_depth:
            self._buffer.append(data)

    def close(self):
        super().close()
        self._flush()


_MARKUP_RE = re.compile(
    r"<(p|div|article|section|h[1-6]|li|blockquote|br|html|body)\b", re.IGNORECASE
)


def normalize_whitespace(text: str) -> str:
    """Collapse internal whitespace runs to single spaces and strip the ends."""
    return " ".join(text.split())


def _split_blocks(body: str) -> list[str]:
    if _MARKUP_RE.search(body):
        parser = _BlockSplitter()
        parser.feed(body)
        parser.close()
        return parser.blocks
    # Plain text: blank-line-separated runs.
    return [normalize_whitespace(chunk) for chunk in re.split(r"\n\s*\n", body)]


def extract_paragraphs(
    doc: SourceDocument,
    min_paragraph_chars: int = DEFAULT_MIN_PARAGRAPH_CHARS,
) -> list[Paragraph]:
    """Split a document body into paragraph units.

    Markup bodies yield one candidate block per block-level element; plain
    text splits on blank lines. Blocks shorter than ``min_paragraph_chars``
    are dropped, and surviving paragraphs get consecutive ordinals from 0
    in document order.
    """
    if not doc.body or not doc.body.strip():
        raise IngestionError(f"document {doc.doc_id!r} has an empty body")
    paragraphs = []
    for block in _split_blocks(doc.body):
        if len(block) < min_paragraph_chars:
            continue
        ordinal = len(paragraphs)
        paragraphs.append(
            Paragraph(
                para_id=f"{doc.doc_id}#p{ordinal}",
                doc_id=doc.doc_id,
                ordinal=ordinal,
                text=block,
            )
        )
    return paragraphs


def translate_document(doc: SourceDocument, client: TranslationClient) -> SourceDocument:
    """Return an English version of the document.

    Documents already in English pass through unchanged with no client call.
    """
    if doc.language.lower() == "en" or doc.language.lower().startswith("en-"):
        return doc
    try:
        translated = client.translate(doc.body, source_language=doc.language)
    except Exception as exc:
        raise TranslationError(doc.doc_id, str(exc)) from exc
    return replace(doc, language="en", body=translated)


def sample_documents(
    corpus: list[SourceDocument], n: int, seed: int
) -> list[SourceDocument]:
    """Uniform sample of n documents without replacement, deterministic per seed."""
    if n > len(corpus):
        raise SamplingError(f"cannot sample {n} documents from a corpus of {len(corpus)}")
    return random.Random(seed).sample(corpus, n)


# ---------------------------------------------------------------------------
# dataset statistics and split hygiene


def dataset_stats(ds: Dataset) -> tuple[dict[FrameCode, int], int]:
    """Count records by main frame; returns (counts for all six codes, total)."""
    from .codebook import FRAME_ORDER

    counts = {code: 0 for code in FRAME_ORDER}
    for record in ds.records:
        counts[record.labels.main] += 1
    return counts, len(ds.records)


def split_leakage(train: Dataset, gold: Dataset) -> dict[str, list[str]]:
    """Paragraph- and document-level overlap between two splits.

    Returns {"para_ids": [...], "doc_ids": [...]}; both lists empty means the
    splits are disjoint.
    """
    train_para = {r.paragraph.para_id for r in train.records}
    gold_para = {r.paragraph.para_id for r in gold.records}
    return {
        "para_ids": sorted(train_para & gold_para),
        "doc_ids": sorted(train.doc_ids() & gold.doc_ids()),
    }


def assert_no_leakage(train: Dataset, gold: Dataset) -> None:
    """Raise LeakageError if the two splits share paragraphs or documents."""
    leaks = split_leakage(train, gold)
    if leaks["para_ids"] or leaks["doc_ids"]:
        raise LeakageError(
            f"gold/train overlap: {len(leaks['para_ids'])} shared para_ids, "
            f"{len(leaks['doc_ids'])} shared doc_ids"
        )


# ---------------------------------------------------------------------------
# persistence

_DATASET_KEYS = ("para_id", "doc_id", "ordinal", "text", "frames", "main", "coder", "split")
_PARAGRAPH_KEYS = ("para_id", "doc_id", "ordinal", "text")


def _record_to_obj(record: LabeledParagraph) -> dict:
    p = record.paragraph
    return {
        "para_id": p.para_id,
        "doc_id": p.doc_id,
        "ordinal": p.ordinal,
        "text": p.text,
        "frames": [c.value for c in record.labels.sorted_frames()],
        "main": record.labels.main.value,
        "coder": record.coder_id,
        "split": record.split,
    }


def save_dataset(ds: Dataset, path) -> None:
    """Write a dataset as one JSON object per line (UTF-8)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for record in ds.records:
            fh.write(json.dumps(_record_to_obj(record), ensure_ascii=False) + "\n")


def load_dataset(path) -> Dataset:
    """Read a JSONL dataset, enforcing the schema and label-set validity."""
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise DatasetParseError(path, line_no, "line is not a JSON object")
            missing = [k for k in _DATASET_KEYS if k not in obj]
            if missing:
                raise DatasetParseError(path, line_no, f"missing fields: {', '.join(missing)}")
            if obj["split"] not in ("train", "gold"):
                raise DatasetParseError(path, line_no, f"unknown split: {obj['split']!r}")
            try:
                labels = LabelSet(
                    frames=[parse_frame_code(c) for c in obj["frames"]],
                    main=parse_frame_code(obj["main"]),
                )
            except Exception as exc:
                raise DatasetParseError(path, line_no, str(exc)) from exc
            require_valid(labels, para_id=obj["para_id"])
            records.append(
                LabeledParagraph(
                    paragraph=Paragraph(
                        para_id=obj["para_id"],
                        doc_id=obj["doc_id"],
                        ordinal=int(obj["ordinal"]),
                        text=obj["text"],
                    ),
                    labels=labels,
                    coder_id=obj["coder"],
                    split=obj["split"],
                )
            )
    return make_dataset(records)


def save_paragraphs(paragraphs: Iterable[Paragraph], path) -> None:
    """Write unlabeled paragraphs as JSONL (the annotation queue format)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for p in paragraphs:
            obj = {"para_id": p.para_id, "doc_id": p.doc_id, "ordinal": p.ordinal, "text": p.text}
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_paragraphs(path) -> list[Paragraph]:
    """Read unlabeled paragraphs from JSONL."""
    path = Path(path)
    paragraphs = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
            missing = [k for k in _PARAGRAPH_KEYS if k not in obj]
            if missing:
                raise DatasetParseError(path, line_no, f"missing fields: {', '.join(missing)}")
            paragraphs.append(
                Paragraph(
                    para_id=obj["para_id"],
                    doc_id=obj["doc_id"],
                    ordinal=int(obj["ordinal"]),
                    text=obj["text"],
                )
            )
    return paragraphs


def save_documents(docs: Iterable[SourceDocument], path) -> None:
    """Write source documents as JSONL."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for d in docs:
            obj = {"doc_id": d.doc_id, "url": d.url, "language": d.language, "body": d.body}
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_documents(path) -> list[SourceDocument]:
    """Read source documents from JSONL."""
    path = Path(path)
    docs = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
            for key in ("doc_id", "body"):
                if key not in obj:
                    raise DatasetParseError(path, line_no, f"missing fields: {key}")
            docs.append(
                SourceDocument(
                    doc_id=obj["doc_id"],
                    url=obj.get("url", ""),
                    language=obj.get("language", "en"),
                    body=obj["body"],
                )
            )
    return docs
