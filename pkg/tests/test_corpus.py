import json
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsframes.codebook import FRAME_ORDER, FrameCode, LabelSet, LabelValidationError
from newsframes.corpus import (
    Dataset,
    DatasetParseError,
    IdentityTranslation,
    IngestionError,
    LabeledParagraph,
    Paragraph,
    SamplingError,
    SourceDocument,
    TranslationError,
    assert_no_leakage,
    dataset_stats,
    extract_paragraphs,
    load_dataset,
    load_paragraphs,
    make_dataset,
    sample_documents,
    save_dataset,
    save_paragraphs,
    split_leakage,
    translate_document,
)
from newsframes.corpus import LeakageError


def doc(body, doc_id="d1", language="en"):
    return SourceDocument(doc_id=doc_id, url="", language=language, body=body)


class TestExtractParagraphs:
    def test_single_block(self):
        paragraphs = extract_paragraphs(doc("Only one block."), min_paragraph_chars=1)
        assert len(paragraphs) == 1
        assert paragraphs[0].ordinal == 0
        assert paragraphs[0].text == "Only one block."

    def test_two_blocks_blank_line(self):
        body = "First block with enough text to keep.\n\nSecond block, also long enough."
        paragraphs = extract_paragraphs(doc(body), min_paragraph_chars=10)
        assert [p.text for p in paragraphs] == [
            "First block with enough text to keep.",
            "Second block, also long enough.",
        ]
        assert [p.ordinal for p in paragraphs] == [0, 1]

    def test_short_block_dropped(self):
        body = "A long enough paragraph that clears the minimum filter.\n\ntiny one\n\nAnother long enough paragraph that clears the filter."
        paragraphs = extract_paragraphs(doc(body), min_paragraph_chars=40)
        assert len(paragraphs) == 2
        assert all(len(p.text) >= 40 for p in paragraphs)
        # ordinals stay consecutive after the drop
        assert [p.ordinal for p in paragraphs] == [0, 1]

    def test_markup_blocks(self):
        body = (
            "<html><body><p>First paragraph from the page markup.</p>"
            "<div>Second paragraph lives inside a div element.</div>"
            "<script>ignored();</script></body></html>"
        )
        paragraphs = extract_paragraphs(doc(body), min_paragraph_chars=10)
        assert [p.text for p in paragraphs] == [
            "First paragraph from the page markup.",
            "Second paragraph lives inside a div element.",
        ]

    def test_whitespace_normalized(self):
        body = "Spaced   out\ttext\nacross   lines but one block here."
        paragraphs = extract_paragraphs(doc(body), min_paragraph_chars=5)
        assert paragraphs[0].text == "Spaced out text across lines but one block here."

    def test_empty_body_rejected(self):
        with pytest.raises(IngestionError):
            extract_paragraphs(doc("   \n  "))

    def test_ordinals_strictly_increasing_and_ids_unique(self):
        body = "\n\n".join(f"Paragraph number {i} padded out to clear the filter." for i in range(8))
        paragraphs = extract_paragraphs(doc(body))
        ordinals = [p.ordinal for p in paragraphs]
        assert ordinals == sorted(ordinals)
        assert len({p.para_id for p in paragraphs}) == len(paragraphs)


class TestTranslateDocument:
    def test_english_passes_through_without_client_call(self):
        calls = []

        class Exploding:
            def translate(self, text, source_language):
                calls.append(text)
                raise AssertionError("must not be called")

        document = doc("Already English.", language="en")
        result = translate_document(document, Exploding())
        assert result is document
        assert calls == []

    def test_identity_backend_sets_language(self):
        document = doc("Deutscher Text.", language="de")
        result = translate_document(document, IdentityTranslation())
        assert result.body == "Deutscher Text."
        assert result.language == "en"

    def test_failure_carries_doc_id(self):
        class Failing:
            def translate(self, text, source_language):
                raise RuntimeError("backend down")

        with pytest.raises(TranslationError) as err:
            translate_document(doc("Texte.", doc_id="doc-7", language="fr"), Failing())
        assert err.value.doc_id == "doc-7"
        assert "doc-7" in str(err.value)


def labeled(para_id, main, frames=None, doc_id=None, coder="c1", split="train", text=None):
    return LabeledParagraph(
        paragraph=Paragraph(
            para_id=para_id,
            doc_id=doc_id or para_id.split("#")[0],
            ordinal=0,
            text=text or f"Paragraph text for {para_id}.",
        ),
        labels=LabelSet(frames=frames or [main], main=main),
        coder_id=coder,
        split=split,
    )


class TestDatasetStats:
    def test_all_no_frame(self):
        ds = make_dataset([labeled(f"d{i}#p0", FrameCode.NO06) for i in range(3)])
        counts, total = dataset_stats(ds)
        assert counts[FrameCode.NO06] == 3
        assert total == 3
        assert sum(counts.values()) == total

    def test_random_dataset_matches_brute_force_tally(self):
        rng = random.Random(99)
        mains = [rng.choice(list(FRAME_ORDER)) for _ in range(50)]
        ds = make_dataset(
            [labeled(f"d{i}#p0", main) for i, main in enumerate(mains)]
        )
        counts, total = dataset_stats(ds)
        oracle = Counter(mains)
        for code in FRAME_ORDER:
            assert counts[code] == oracle.get(code, 0)
        assert total == 50


class TestSampleDocuments:
    def make_corpus(self, n):
        return [doc(f"Body {i}", doc_id=f"doc{i}") for i in range(n)]

    def test_full_sample_is_whole_corpus(self):
        corpus = self.make_corpus(10)
        sampled = sample_documents(corpus, 10, seed=1)
        assert sorted(d.doc_id for d in sampled) == sorted(d.doc_id for d in corpus)

    def test_deterministic_per_seed(self):
        corpus = self.make_corpus(30)
        first = sample_documents(corpus, 10, seed=42)
        second = sample_documents(corpus, 10, seed=42)
        assert [d.doc_id for d in first] == [d.doc_id for d in second]

    def test_oversampling_rejected(self):
        with pytest.raises(SamplingError):
            sample_documents(self.make_corpus(3), 4, seed=0)

    def test_uniform_inclusion_frequency(self):
        # Monte-Carlo check: 1,000 draws of 10-from-100; every document's
        # inclusion frequency must sit within 10% +/- 5 percentage points.
        corpus = self.make_corpus(100)
        seen = Counter()
        repetitions = 1000
        for seed in range(repetitions):
            for d in sample_documents(corpus, 10, seed=seed):
                seen[d.doc_id] += 1
        for document in corpus:
            frequency = seen[document.doc_id] / repetitions
            assert 0.05 <= frequency <= 0.15


class TestDatasetPersistence:
    def test_round_trip_is_lossless_and_second_save_identical(self, tmp_path):
        records = [
            labeled("a#p0", FrameCode.AR01, frames=[FrameCode.AR01, FrameCode.EF05]),
            labeled("a#p1", FrameCode.HI02, doc_id="a"),
            labeled("b#p0", FrameCode.NO06),
            labeled("c#p0", FrameCode.CF03, split="gold"),
            labeled("d#p0", FrameCode.MF04, text="Unicode text with ümlauts."),
        ]
        ds = make_dataset(records)
        path = tmp_path / "ds.jsonl"
        save_dataset(ds, path)
        loaded = load_dataset(path)
        assert loaded.records == ds.records
        assert loaded.split == "mixed"
        second = tmp_path / "ds2.jsonl"
        save_dataset(loaded, second)
        assert second.read_bytes() == path.read_bytes()

    def test_missing_main_is_parse_error_with_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = json.dumps(
            {
                "para_id": "a#p0", "doc_id": "a", "ordinal": 0, "text": "ok",
                "frames": ["AR01"], "main": "AR01", "coder": "c", "split": "train",
            }
        )
        bad = json.dumps(
            {
                "para_id": "a#p1", "doc_id": "a", "ordinal": 1, "text": "bad",
                "frames": ["AR01"], "coder": "c", "split": "train",
            }
        )
        path.write_text(good + "\n" + bad + "\n", encoding="utf-8")
        with pytest.raises(DatasetParseError) as err:
            load_dataset(path)
        assert err.value.line_no == 2
        assert "main" in str(err.value)

    def test_invalid_label_set_names_rule(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        obj = {
            "para_id": "a#p0", "doc_id": "a", "ordinal": 0, "text": "ok",
            "frames": ["NO06", "HI02"], "main": "NO06", "coder": "c", "split": "train",
        }
        path.write_text(json.dumps(obj) + "\n", encoding="utf-8")
        with pytest.raises(LabelValidationError) as err:
            load_dataset(path)
        assert "NO06 must be exclusive" in str(err.value)
        assert err.value.para_id == "a#p0"

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("{not json}\n", encoding="utf-8")
        with pytest.raises(DatasetParseError) as err:
            load_dataset(path)
        assert err.value.line_no == 1

    def test_duplicate_para_id_rejected(self, tmp_path):
        ds_path = tmp_path / "dup.jsonl"
        obj = {
            "para_id": "a#p0", "doc_id": "a", "ordinal": 0, "text": "ok",
            "frames": ["AR01"], "main": "AR01", "coder": "c", "split": "train",
        }
        ds_path.write_text(json.dumps(obj) + "\n" + json.dumps(obj) + "\n")
        with pytest.raises(ValueError, match="duplicate para_id"):
            load_dataset(ds_path)

    def test_paragraph_file_round_trip(self, tmp_path):
        paragraphs = [
            Paragraph(para_id=f"d#p{i}", doc_id="d", ordinal=i, text=f"Text {i}")
            for i in range(4)
        ]
        path = tmp_path / "paras.jsonl"
        save_paragraphs(paragraphs, path)
        assert load_paragraphs(path) == paragraphs


codes = st.sampled_from(list(FRAME_ORDER))


@st.composite
def label_sets(draw):
    main = draw(codes)
    if main is FrameCode.NO06:
        return LabelSet(frames=[FrameCode.NO06], main=FrameCode.NO06)
    extra = draw(
        st.sets(st.sampled_from([c for c in FRAME_ORDER if c is not FrameCode.NO06]))
    )
    return LabelSet(frames=extra | {main}, main=main)


@st.composite
def datasets(draw):
    size = draw(st.integers(min_value=1, max_value=12))
    records = []
    for i in range(size):
        records.append(
            LabeledParagraph(
                paragraph=Paragraph(
                    para_id=f"doc{i}#p0",
                    doc_id=f"doc{i}",
                    ordinal=0,
                    text=draw(st.text(min_size=1, max_size=40).map(lambda s: s.strip() or "x")),
                ),
                labels=draw(label_sets()),
                coder_id=draw(st.sampled_from(["c1", "c2"])),
                split=draw(st.sampled_from(["train", "gold"])),
            )
        )
    return make_dataset(records)


@settings(max_examples=40, deadline=None)
@given(ds=datasets())
def test_save_load_round_trip_property(tmp_path_factory, ds):
    path = tmp_path_factory.mktemp("prop") / "ds.jsonl"
    save_dataset(ds, path)
    assert load_dataset(path).records == ds.records


class TestLeakage:
    def test_disjoint_splits_are_clean(self):
        train = make_dataset([labeled("a#p0", FrameCode.AR01)], split="train")
        gold = make_dataset(
            [labeled("b#p0", FrameCode.AR01, split="gold")], split="gold"
        )
        leaks = split_leakage(train, gold)
        assert leaks == {"para_ids": [], "doc_ids": []}
        assert_no_leakage(train, gold)

    def test_shared_doc_detected_even_with_distinct_paragraphs(self):
        train = make_dataset([labeled("a#p0", FrameCode.AR01)], split="train")
        gold = make_dataset(
            [labeled("a#p1", FrameCode.HI02, doc_id="a", split="gold")], split="gold"
        )
        leaks = split_leakage(train, gold)
        assert leaks["doc_ids"] == ["a"]
        assert leaks["para_ids"] == []
        with pytest.raises(LeakageError):
            assert_no_leakage(train, gold)

    def test_split_tag_consistency_enforced(self):
        with pytest.raises(ValueError, match="split"):
            Dataset(
                records=(labeled("a#p0", FrameCode.AR01, split="gold"),),
                split="train",
            )
