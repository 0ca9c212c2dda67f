"""Human labeling sessions and inter-coder reliability.

Coders work through an ordered queue of paragraphs, one session per coder.
Submitted annotations go to an append-only JSONL store. Agreement between
two coders is measured with Cohen's kappa over main-frame labels, with a
large-sample confidence interval and the conventional qualitative bands.
"""

from __future__ import annotations

import json
import math
import threading
import uuid
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from statistics import NormalDist

from .codebook import FrameCode, LabelSet, frame_index, parse_frame_code, require_valid
from .corpus import Paragraph


class SessionError(KeyError):
    """Unknown annotation session."""


class SequencingError(ValueError):
    """Annotation submitted for a paragraph other than the current queue item."""


class DuplicateAnnotationError(ValueError):
    """This coder already has a stored annotation for this paragraph."""

    def __init__(self, para_id: str, coder_id: str):
        self.para_id = para_id
        self.coder_id = coder_id
        super().__init__(f"coder {coder_id!r} already annotated paragraph {para_id!r}")


class AgreementInputError(ValueError):
    """Agreement computation received unusable input."""


class DegenerateAgreementError(ValueError):
    """Expected agreement is 1, so kappa is undefined."""


@dataclass(frozen=True)
class AnnotationRecord:
    """One stored labeling decision: who labeled which paragraph, and how."""

    para_id: str
    coder_id: str
    labels: LabelSet
    timestamp: datetime

    def to_obj(self) -> dict:
        return {
            "para_id": self.para_id,
            "coder": self.coder_id,
            "frames": [c.value for c in self.labels.sorted_frames()],
            "main": self.labels.main.value,
            "ts": self.timestamp.isoformat(),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "AnnotationRecord":
        labels = LabelSet(
            frames=[parse_frame_code(c) for c in obj["frames"]],
            main=parse_frame_code(obj["main"]),
        )
        return cls(
            para_id=obj["para_id"],
            coder_id=obj["coder"],
            labels=labels,
            timestamp=datetime.fromisoformat(obj["ts"]),
        )


class AnnotationStore:
    """Append-only annotation log backed by a JSONL file.

    Records are never mutated or deleted; (para_id, coder_id) pairs are
    unique. Writes are serialized through a lock so concurrent sessions
    cannot interleave partial lines.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: list[AnnotationRecord] = []
        self._keys: set[tuple[str, str]] = set()
        if self.path.exists():
            self._load()

    def _load(self):
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                record = AnnotationRecord.from_obj(json.loads(line))
                self._remember(record)

    def _remember(self, record: AnnotationRecord):
        key = (record.para_id, record.coder_id)
        if key in self._keys:
            raise DuplicateAnnotationError(record.para_id, record.coder_id)
        self._keys.add(key)
        self._records.append(record)

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._keys

    def append(self, record: AnnotationRecord) -> AnnotationRecord:
        """Persist a record; rejects duplicates before touching the file."""
        require_valid(record.labels, para_id=record.para_id)
        with self._lock:
            self._remember(record)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.to_obj(), ensure_ascii=False) + "\n")
        return record

    def records(self) -> list[AnnotationRecord]:
        return list(self._records)

    def by_coder(self, coder_id: str) -> dict[str, AnnotationRecord]:
        """This coder's records keyed by para_id."""
        return {r.para_id: r for r in self._records if r.coder_id == coder_id}

    def coder_counts(self) -> dict[str, int]:
        counts = Counter(r.coder_id for r in self._records)
        return dict(counts)


@dataclass
class AnnotationSession:
    """One coder's pass over a queue of paragraph ids."""

    session_id: str
    coder_id: str
    queue: list[str]
    cursor: int = 0


class AnnotationWorkflow:
    """Session bookkeeping over a paragraph collection and a store.

    The store is the durable state; sessions are transient. A new session's
    queue skips paragraphs the coder has already annotated, so resuming after
    a restart continues where the store left off.
    """

    def __init__(self, paragraphs: list[Paragraph], store: AnnotationStore):
        self.paragraphs = {p.para_id: p for p in paragraphs}
        self.order = [p.para_id for p in paragraphs]
        self.store = store
        self._sessions: dict[str, AnnotationSession] = {}

    def create_session(self, coder_id: str) -> AnnotationSession:
        done = self.store.by_coder(coder_id)
        queue = [pid for pid in self.order if pid not in done]
        session = AnnotationSession(
            session_id=uuid.uuid4().hex[:12], coder_id=coder_id, queue=queue
        )
        self._sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> AnnotationSession:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise SessionError(f"unknown session: {session_id!r}") from None

    def next_paragraph(self, session_id: str) -> Paragraph | None:
        """The current queue item, or None when the queue is exhausted.

        Peeking never advances the cursor; only a successful submit does.
        """
        session = self.get_session(session_id)
        if session.cursor >= len(session.queue):
            return None
        return self.paragraphs[session.queue[session.cursor]]

    def submit_annotation(
        self, session_id: str, para_id: str, labels: LabelSet
    ) -> AnnotationRecord:
        """Validate, persist, and advance past the current queue item."""
        session = self.get_session(session_id)
        require_valid(labels, para_id=para_id)
        if session.cursor >= len(session.queue):
            raise SequencingError(f"session {session_id!r} queue is exhausted")
        expected = session.queue[session.cursor]
        if para_id != expected:
            raise SequencingError(
                f"expected annotation for {expected!r}, got {para_id!r}"
            )
        record = AnnotationRecord(
            para_id=para_id,
            coder_id=session.coder_id,
            labels=labels,
            timestamp=datetime.now(timezone.utc),
        )
        self.store.append(record)
        session.cursor += 1
        return record


# ---------------------------------------------------------------------------
# Cohen's kappa

#: Qualitative interpretation bands for kappa (Landis & Koch, 1977).
AGREEMENT_BANDS = (
    (0.00, "slight"),
    (0.21, "fair"),
    (0.41, "moderate"),
    (0.61, "substantial"),
    (0.81, "almost_perfect"),
)


def agreement_band(kappa: float) -> str:
    """Map a kappa value to its Landis-Koch band; negative values are "poor"."""
    if kappa < 0:
        return "poor"
    band = "slight"
    for lower, name in AGREEMENT_BANDS:
        if kappa >= lower:
            band = name
    return band


@dataclass(frozen=True)
class AgreementReport:
    """Chance-corrected agreement between two coders over shared items."""

    kappa: float
    p_observed: float
    p_expected: float
    n_items: int
    band: str

    def to_obj(self) -> dict:
        return {
            "kappa": self.kappa,
            "p_observed": self.p_observed,
            "p_expected": self.p_expected,
            "n_items": self.n_items,
            "band": self.band,
        }


def cohen_kappa(
    labels_a: list[FrameCode], labels_b: list[FrameCode]
) -> AgreementReport:
    """Cohen's kappa over two aligned main-frame label lists.

    p_observed is the exact-match fraction; p_expected is the chance
    agreement from the two coders' marginal distributions; kappa is
    (p_o - p_e) / (1 - p_e).
    """
    if len(labels_a) != len(labels_b):
        raise AgreementInputError(
            f"label lists differ in length: {len(labels_a)} vs {len(labels_b)}"
        )
    n = len(labels_a)
    if n == 0:
        raise AgreementInputError("label lists are empty")
    labels_a = [FrameCode(c) for c in labels_a]
    labels_b = [FrameCode(c) for c in labels_b]
    p_observed = sum(a == b for a, b in zip(labels_a, labels_b)) / n
    marginal_a = Counter(labels_a)
    marginal_b = Counter(labels_b)
    p_expected = sum(
        (marginal_a[c] / n) * (marginal_b.get(c, 0) / n) for c in marginal_a
    )
    if p_expected >= 1.0:
        raise DegenerateAgreementError(
            "expected agreement is 1 (both coders used a single identical "
            "label); kappa is undefined"
        )
    kappa = (p_observed - p_expected) / (1.0 - p_expected)
    return AgreementReport(
        kappa=kappa,
        p_observed=p_observed,
        p_expected=p_expected,
        n_items=n,
        band=agreement_band(kappa),
    )


def kappa_confidence_interval(
    report: AgreementReport,
    labels_a: list[FrameCode],
    labels_b: list[FrameCode],
    level: float = 0.95,
) -> tuple[float, float]:
    """Asymptotic confidence interval for kappa, clipped to [-1, 1].

    Uses the large-sample variance of the kappa estimator (Fleiss, Cohen &
    Everitt, 1969) with a normal quantile. The interval always contains the
    point estimate. Small samples (a handful of items) are outside the
    asymptotic regime; interpret accordingly.
    """
    n = len(labels_a)
    if n != len(labels_b):
        raise AgreementInputError(
            f"label lists differ in length: {n} vs {len(labels_b)}"
        )
    if n < 2:
        raise AgreementInputError("need at least 2 items for a confidence interval")
    labels_a = [FrameCode(c) for c in labels_a]
    labels_b = [FrameCode(c) for c in labels_b]
    categories = sorted(set(labels_a) | set(labels_b), key=frame_index)
    joint: dict[tuple[FrameCode, FrameCode], float] = {}
    for a, b in zip(labels_a, labels_b):
        joint[(a, b)] = joint.get((a, b), 0.0) + 1.0 / n
    row = {i: sum(joint.get((i, j), 0.0) for j in categories) for i in categories}
    col = {j: sum(joint.get((i, j), 0.0) for i in categories) for j in categories}
    p_o = report.p_observed
    p_e = report.p_expected

    diag_term = sum(
        joint.get((i, i), 0.0)
        * ((1 - p_e) - (row[i] + col[i]) * (1 - p_o)) ** 2
        for i in categories
    )
    offdiag_term = (1 - p_o) ** 2 * sum(
        joint.get((i, j), 0.0) * (col[i] + row[j]) ** 2
        for i in categories
        for j in categories
        if i != j
    )
    centering = (p_o * p_e - 2 * p_e + p_o) ** 2
    variance = (diag_term + offdiag_term - centering) / (n * (1 - p_e) ** 4)
    se = math.sqrt(max(variance, 0.0))
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    lower = max(-1.0, report.kappa - z * se)
    upper = min(1.0, report.kappa + z * se)
    return (min(lower, report.kappa), max(upper, report.kappa))


def agreement_report(
    store: AnnotationStore, coder_a: str, coder_b: str
) -> AgreementReport:
    """Kappa over the main frames of the paragraphs both coders annotated."""
    a_records = store.by_coder(coder_a)
    b_records = store.by_coder(coder_b)
    shared = sorted(set(a_records) & set(b_records))
    if not shared:
        raise AgreementInputError(
            f"coders {coder_a!r} and {coder_b!r} share no annotated paragraphs"
        )
    labels_a = [a_records[pid].labels.main for pid in shared]
    labels_b = [b_records[pid].labels.main for pid in shared]
    return cohen_kappa(labels_a, labels_b)


def aligned_main_frames(
    store: AnnotationStore, coder_a: str, coder_b: str
) -> tuple[list[FrameCode], list[FrameCode]]:
    """The two coders' main frames aligned over their shared paragraphs."""
    a_records = store.by_coder(coder_a)
    b_records = store.by_coder(coder_b)
    shared = sorted(set(a_records) & set(b_records))
    return (
        [a_records[pid].labels.main for pid in shared],
        [b_records[pid].labels.main for pid in shared],
    )
