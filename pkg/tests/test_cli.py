import json
import subprocess
import sys

import pytest

from newsframes import cli
from newsframes.corpus import (
    SourceDocument,
    load_documents,
    load_paragraphs,
    save_dataset,
    save_documents,
)
from newsframes.evaluate import load_confusion_csv, report_from_matrix

from conftest import make_keyword_corpus


def run_cli(argv):
    return cli.main(argv)


class TestReportCommand:
    def test_report_matches_in_process_result_bit_for_bit(self, figure3_csv, capsys):
        assert run_cli(["report", "--cm", str(figure3_csv)]) == 0
        out = capsys.readouterr().out.strip()
        cm = load_confusion_csv(figure3_csv)
        expected = json.dumps(report_from_matrix(cm).to_obj(), indent=2)
        assert out == expected

    def test_report_published_values(self, figure3_csv, capsys):
        run_cli(["report", "--cm", str(figure3_csv)])
        obj = json.loads(capsys.readouterr().out)
        ar01 = obj["per_class"]["AR01"]
        assert round(ar01["precision"], 2) == 0.97
        assert round(ar01["recall"], 2) == 0.99
        assert round(ar01["f1"], 2) == 0.98
        assert obj["per_class"]["MF04"] == {
            "precision": 0.0, "recall": 0.0, "f1": 0.0, "support": 14,
        }
        assert round(obj["accuracy"], 4) == 0.9828

    def test_report_out_file(self, figure3_csv, tmp_path, capsys):
        out = tmp_path / "report.json"
        assert run_cli(["report", "--cm", str(figure3_csv), "--out", str(out)]) == 0
        obj = json.loads(out.read_text())
        assert round(obj["accuracy"], 2) == 0.98

    def test_missing_file_is_runtime_error(self, tmp_path, capsys):
        code = run_cli(["report", "--cm", str(tmp_path / "nope.csv")])
        assert code == 1
        err = capsys.readouterr().err
        assert err.startswith("error: ")
        assert err.count("\n") == 1


class TestKappaCommand:
    def write_annotations(self, path, items, coder):
        with open(path, "w", encoding="utf-8") as fh:
            for para_id, main in items:
                fh.write(
                    json.dumps(
                        {
                            "para_id": para_id,
                            "coder": coder,
                            "frames": [main],
                            "main": main,
                            "ts": "2024-06-01T10:00:00+00:00",
                        }
                    )
                    + "\n"
                )

    def test_identical_files_give_kappa_one(self, tmp_path, capsys):
        items = [(f"p{i}", "AR01" if i % 2 else "HI02") for i in range(10)]
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        self.write_annotations(a, items, "a")
        self.write_annotations(b, items, "b")
        assert run_cli(["kappa", "--a", str(a), "--b", str(b)]) == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["kappa"] == 1.0
        assert obj["band"] == "almost_perfect"
        assert obj["n_items"] == 10

    def test_ci_flag_adds_interval(self, tmp_path, capsys):
        items = [(f"p{i}", m) for i, m in enumerate(
            ["AR01", "AR01", "HI02", "HI02", "CF03", "AR01", "HI02", "CF03"]
        )]
        other = [(f"p{i}", m) for i, m in enumerate(
            ["AR01", "HI02", "HI02", "HI02", "CF03", "AR01", "CF03", "CF03"]
        )]
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        self.write_annotations(a, items, "a")
        self.write_annotations(b, other, "b")
        assert run_cli(["kappa", "--a", str(a), "--b", str(b), "--ci"]) == 0
        obj = json.loads(capsys.readouterr().out)
        ci = obj["confidence_interval"]
        assert ci["lower"] <= obj["kappa"] <= ci["upper"]

    def test_empty_overlap_is_runtime_error(self, tmp_path, capsys):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        self.write_annotations(a, [("p1", "AR01")], "a")
        self.write_annotations(b, [("p2", "AR01")], "b")
        assert run_cli(["kappa", "--a", str(a), "--b", str(b)]) == 1
        assert capsys.readouterr().err.startswith("error: AgreementInputError")


class TestUsageErrors:
    def test_cv_k_zero_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli(["cv", "--data", "x.jsonl", "--config", "c.json", "--k", "0"])
        assert err.value.code == 2

    def test_unknown_command_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            run_cli(["frobnicate"])
        assert err.value.code == 2

    def test_missing_required_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            run_cli(["report"])
        assert err.value.code == 2


class TestCorpusCommands:
    def test_ingest_and_sample_round_trip(self, tmp_path, capsys):
        docs = [
            SourceDocument(
                doc_id=f"doc{i}",
                url=f"https://example.org/{i}",
                language="de" if i % 2 else "en",
                body=(
                    f"First paragraph of document {i} padded to clear the filter.\n\n"
                    f"Second paragraph of document {i} also padded enough."
                ),
            )
            for i in range(6)
        ]
        docs_path = tmp_path / "docs.jsonl"
        save_documents(docs, docs_path)

        sampled_path = tmp_path / "sampled.jsonl"
        assert run_cli([
            "sample", "--docs", str(docs_path), "--n", "4",
            "--seed", "7", "--out", str(sampled_path),
        ]) == 0
        sampled = load_documents(sampled_path)
        assert len(sampled) == 4

        paras_path = tmp_path / "paragraphs.jsonl"
        assert run_cli([
            "ingest", "--docs", str(sampled_path), "--out", str(paras_path),
            "--translate",
        ]) == 0
        paragraphs = load_paragraphs(paras_path)
        assert len(paragraphs) == 8
        assert all(p.text for p in paragraphs)

    def test_sample_too_large_is_runtime_error(self, tmp_path, capsys):
        docs_path = tmp_path / "docs.jsonl"
        save_documents(
            [SourceDocument(doc_id="d", url="", language="en", body="Some body text.")],
            docs_path,
        )
        assert run_cli([
            "sample", "--docs", str(docs_path), "--n", "5", "--seed", "0",
            "--out", str(tmp_path / "out.jsonl"),
        ]) == 1
        assert capsys.readouterr().err.startswith("error: SamplingError")


class TestModelCommands:
    def test_classify_writes_scores_and_main(self, trained_artifact, tmp_path, capsys):
        texts_path = tmp_path / "texts.jsonl"
        with open(texts_path, "w") as fh:
            fh.write(json.dumps({"text": "budget costs pension"}) + "\n")
            fh.write(json.dumps({"text": "grandmother tears family"}) + "\n")
        out_path = tmp_path / "preds.jsonl"
        assert run_cli([
            "classify", "--model", trained_artifact.weights_ref,
            "--in", str(texts_path), "--out", str(out_path),
        ]) == 0
        rows = [json.loads(line) for line in out_path.read_text().splitlines()]
        assert len(rows) == 2
        for row in rows:
            assert set(row["scores"]) == {"AR01", "HI02", "CF03", "MF04", "EF05", "NO06"}
            assert abs(sum(row["scores"].values()) - 1.0) <= 1e-6
            assert row["main"] in row["scores"]

    def test_train_command(self, tiny_encoder, tmp_path, capsys):
        train_ds = make_keyword_corpus(per_class=2, seed=30)
        ds_path = tmp_path / "train.jsonl"
        save_dataset(train_ds, ds_path)
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({
            "seed": 3,
            "output_dir": str(tmp_path / "ignored"),
            "pretrained_encoder_id": tiny_encoder,
            "epochs": 1,
            "logging_steps": 2,
        }))
        out_dir = tmp_path / "model"
        assert run_cli([
            "train", "--config", str(config_path), "--train", str(ds_path),
            "--out", str(out_dir),
        ]) == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["steps"] == 3  # ceil(12/4) * 1 epoch
        assert obj["log_entries"] == 1  # single log at step 2
        assert (out_dir / "label_map.json").exists()

    def test_cv_command_with_tiny_encoder(self, tiny_encoder, tmp_path, capsys):
        ds = make_keyword_corpus(per_class=4, seed=31)
        ds_path = tmp_path / "data.jsonl"
        save_dataset(ds, ds_path)
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({
            "seed": 3,
            "output_dir": str(tmp_path / "cv-models"),
            "pretrained_encoder_id": tiny_encoder,
            "epochs": 1,
        }))
        cm_path = tmp_path / "cm.csv"
        assert run_cli([
            "cv", "--data", str(ds_path), "--config", str(config_path),
            "--k", "2", "--seed", "0", "--cm-out", str(cm_path),
        ]) == 0
        obj = json.loads(capsys.readouterr().out)
        assert set(obj) == {"per_class", "macro", "weighted", "accuracy"}
        cm = load_confusion_csv(cm_path)
        assert cm.total == len(ds)

    def test_evaluate_command_guards_leakage(self, trained_artifact, tmp_path, capsys):
        # gold set built from the same doc ids as training -> leakage error
        gold = make_keyword_corpus(per_class=8, seed=5, split="gold")
        gold_path = tmp_path / "gold.jsonl"
        save_dataset(gold, gold_path)
        report_path = tmp_path / "report.json"
        assert run_cli([
            "evaluate", "--model", trained_artifact.weights_ref,
            "--gold", str(gold_path), "--report", str(report_path),
        ]) == 1
        assert capsys.readouterr().err.startswith("error: LeakageError")

    def test_evaluate_command_clean_gold(self, trained_artifact, tmp_path, capsys):
        gold = make_keyword_corpus(per_class=2, seed=77, split="gold")
        # rename doc ids so they cannot collide with the training fingerprint
        from newsframes.corpus import LabeledParagraph, Paragraph, make_dataset

        renamed = [
            LabeledParagraph(
                paragraph=Paragraph(
                    para_id=f"gold-{i}#p0", doc_id=f"gold-{i}", ordinal=0,
                    text=r.paragraph.text,
                ),
                labels=r.labels,
                coder_id=r.coder_id,
                split="gold",
            )
            for i, r in enumerate(gold.records)
        ]
        gold_path = tmp_path / "gold.jsonl"
        save_dataset(make_dataset(renamed, split="gold"), gold_path)
        report_path = tmp_path / "report.json"
        assert run_cli([
            "evaluate", "--model", trained_artifact.weights_ref,
            "--gold", str(gold_path), "--report", str(report_path),
        ]) == 0
        obj = json.loads(report_path.read_text())
        assert 0.0 <= obj["accuracy"] <= 1.0


class TestCodebookCommand:
    def test_codebook_export(self, tmp_path):
        out = tmp_path / "codebook.md"
        assert run_cli(["codebook", "--out", str(out)]) == 0
        text = out.read_text()
        assert "AR01" in text and "NO06" in text


class TestSubprocessEntryPoint:
    def test_module_invocation(self, figure3_csv):
        proc = subprocess.run(
            [sys.executable, "-m", "newsframes", "report", "--cm", str(figure3_csv)],
            capture_output=True,
            text=True,
            timeout=60,
        )
        assert proc.returncode == 0
        obj = json.loads(proc.stdout)
        assert round(obj["accuracy"], 4) == 0.9828
