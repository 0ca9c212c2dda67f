"""Command-line interface.

Subcommands cover the whole pipeline: ingest/sample for corpus preparation,
serve for the annotation service, kappa for inter-coder reliability, train/
cv/evaluate/classify for the model, and report as the model-free metric path
(confusion-matrix CSV in, full report JSON out).

Exit codes: 0 success, 2 usage error, 1 runtime error with a single
machine-parsable "error: <kind>: <reason>" line on stderr. Heavy imports
(torch, transformers, fastapi) happen inside the subcommands that need them,
so metric-only invocations stay fast.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}")
    if number <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="newsframes",
        description="Generic news frame detection pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="split documents into paragraph JSONL")
    p.add_argument("--docs", required=True, help="source documents JSONL")
    p.add_argument("--out", required=True, help="output paragraph JSONL")
    p.add_argument("--min-chars", type=_positive_int, default=None,
                   help="minimum paragraph length in characters")
    p.add_argument("--translate", action="store_true",
                   help="normalize non-English documents through the identity backend")

    p = sub.add_parser("sample", help="random document subset")
    p.add_argument("--docs", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="start the annotation/classification service")
    p.add_argument("--config", default=None, help="AppConfig JSON (or $NEWSFRAMES_CONFIG)")
    p.add_argument("--port", type=_positive_int, default=None)

    p = sub.add_parser("kappa", help="inter-coder agreement from two annotation files")
    p.add_argument("--a", required=True, help="first coder's annotation JSONL")
    p.add_argument("--b", required=True, help="second coder's annotation JSONL")
    p.add_argument("--ci", action="store_true", help="include a 95%% confidence interval")
    p.add_argument("--out", default=None, help="write the report JSON here instead of stdout")

    p = sub.add_parser("train", help="fine-tune the classifier")
    p.add_argument("--config", required=True, help="TrainingConfig JSON")
    p.add_argument("--train", required=True, help="training dataset JSONL")
    p.add_argument("--eval", default=None, help="evaluation dataset JSONL")
    p.add_argument("--out", default=None, help="override output_dir")
    p.add_argument("--seed", type=int, default=None, help="override seed")

    p = sub.add_parser("cv", help="k-fold cross-validation with pooled predictions")
    p.add_argument("--data", required=True, help="labeled dataset JSONL")
    p.add_argument("--config", required=True, help="TrainingConfig JSON")
    p.add_argument("--k", type=_positive_int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stratified", action="store_true")
    p.add_argument("--out", default=None, help="report JSON output path")
    p.add_argument("--cm-out", default=None, help="pooled confusion matrix CSV path")

    p = sub.add_parser("evaluate", help="evaluate a trained model on a gold dataset")
    p.add_argument("--model", required=True, help="artifact directory")
    p.add_argument("--gold", required=True, help="gold dataset JSONL")
    p.add_argument("--report", required=True, help="report JSON output path")

    p = sub.add_parser("classify", help="predict main frames for texts")
    p.add_argument("--model", required=True, help="artifact directory")
    p.add_argument("--in", dest="input_path", required=True,
                   help="JSONL with a \"text\" field per line")
    p.add_argument("--out", required=True, help="predictions JSONL output path")

    p = sub.add_parser("report", help="full metric report from a confusion matrix CSV")
    p.add_argument("--cm", required=True, help="confusion matrix CSV")
    p.add_argument("--out", default=None, help="write the report JSON here instead of stdout")

    p = sub.add_parser("codebook", help="export the codebook as markdown")
    p.add_argument("--out", default=None)

    return parser


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _cmd_ingest(args) -> int:
    from . import corpus

    docs = corpus.load_documents(args.docs)
    if args.translate:
        client = corpus.IdentityTranslation()
        docs = [corpus.translate_document(d, client) for d in docs]
    min_chars = args.min_chars or corpus.DEFAULT_MIN_PARAGRAPH_CHARS
    paragraphs = []
    for doc in docs:
        paragraphs.extend(corpus.extract_paragraphs(doc, min_paragraph_chars=min_chars))
    corpus.save_paragraphs(paragraphs, args.out)
    print(f"ingested {len(docs)} documents -> {len(paragraphs)} paragraphs -> {args.out}")
    return 0


def _cmd_sample(args) -> int:
    from . import corpus

    docs = corpus.load_documents(args.docs)
    subset = corpus.sample_documents(docs, args.n, args.seed)
    corpus.save_documents(subset, args.out)
    print(f"sampled {len(subset)}/{len(docs)} documents -> {args.out}")
    return 0


def _cmd_serve(args) -> int:
    from .config import load_app_config
    from .service import serve

    config = load_app_config(args.config)
    serve(config, port=args.port)
    return 0


def _load_annotation_file(path: str):
    from .annotate import AnnotationRecord

    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(AnnotationRecord.from_obj(json.loads(line)))
    return records


def _cmd_kappa(args) -> int:
    from .annotate import cohen_kappa, kappa_confidence_interval

    records_a = {r.para_id: r for r in _load_annotation_file(args.a)}
    records_b = {r.para_id: r for r in _load_annotation_file(args.b)}
    shared = sorted(set(records_a) & set(records_b))
    labels_a = [records_a[pid].labels.main for pid in shared]
    labels_b = [records_b[pid].labels.main for pid in shared]
    report = cohen_kappa(labels_a, labels_b)
    obj = report.to_obj()
    if args.ci:
        lower, upper = kappa_confidence_interval(report, labels_a, labels_b)
        obj["confidence_interval"] = {"level": 0.95, "lower": lower, "upper": upper}
    _emit(json.dumps(obj, indent=2), args.out)
    return 0


def _cmd_train(args) -> int:
    import math

    from . import corpus, train

    config_obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.out is not None:
        config_obj["output_dir"] = args.out
    if args.seed is not None:
        config_obj["seed"] = args.seed
    config = train.TrainingConfig.from_obj(config_obj)
    train_set = corpus.load_dataset(args.train)
    eval_set = corpus.load_dataset(args.eval) if args.eval else None
    artifact, log = train.fine_tune(config, train_set, eval_set)
    total_steps = math.ceil(len(train_set) / config.train_batch_size) * config.epochs
    print(
        json.dumps(
            {
                "output_dir": artifact.weights_ref,
                "config_fingerprint": artifact.config_fingerprint,
                "steps": total_steps,
                "log_entries": len(log),
            },
            indent=2,
        )
    )
    return 0


def _cmd_cv(args) -> int:
    from . import corpus, evaluate, train

    config_obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    config = train.TrainingConfig.from_obj(config_obj)
    ds = corpus.load_dataset(args.data)
    cm, report = evaluate.cross_validate(
        ds, args.k, config, args.seed, stratified=args.stratified
    )
    if args.cm_out:
        evaluate.save_confusion_csv(cm, args.cm_out)
    _emit(json.dumps(report.to_obj(), indent=2), args.out)
    return 0


def _cmd_evaluate(args) -> int:
    from . import corpus, evaluate, train

    artifact = train.load_artifact(args.model)
    gold = corpus.load_dataset(args.gold)
    report = evaluate.evaluate_gold(artifact, gold)
    Path(args.report).write_text(
        json.dumps(report.to_obj(), indent=2) + "\n", encoding="utf-8"
    )
    print(f"evaluated {len(gold)} gold paragraphs -> {args.report}")
    return 0


def _cmd_classify(args) -> int:
    from . import train

    artifact = train.load_artifact(args.model)
    rows = []
    with open(args.input_path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "text" not in obj:
                raise ValueError(f"{args.input_path}:{line_no}: missing \"text\" field")
            rows.append(obj)
    results = train.predict_batch(artifact, [r["text"] for r in rows])
    with open(args.out, "w", encoding="utf-8") as fh:
        for obj, (scores, main) in zip(rows, results):
            fh.write(
                json.dumps(
                    {**obj, "scores": scores.to_obj(), "main": main.value},
                    ensure_ascii=False,
                )
                + "\n"
            )
    print(f"classified {len(rows)} texts -> {args.out}")
    return 0


def _cmd_report(args) -> int:
    from . import evaluate

    cm = evaluate.load_confusion_csv(args.cm)
    report = evaluate.report_from_matrix(cm)
    _emit(json.dumps(report.to_obj(), indent=2), args.out)
    return 0


def _cmd_codebook(args) -> int:
    from .codebook import codebook_markdown

    _emit(codebook_markdown(), args.out)
    return 0


_HANDLERS = {
    "ingest": _cmd_ingest,
    "sample": _cmd_sample,
    "serve": _cmd_serve,
    "kappa": _cmd_kappa,
    "train": _cmd_train,
    "cv": _cmd_cv,
    "evaluate": _cmd_evaluate,
    "classify": _cmd_classify,
    "report": _cmd_report,
    "codebook": _cmd_codebook,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except KeyboardInterrupt:
        print("error: Interrupted: aborted by user", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
