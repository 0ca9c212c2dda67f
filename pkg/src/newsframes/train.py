"""Fine-tuning of a pretrained bidirectional-encoder classifier on main frames.

The trainer is an explicit torch loop so the step/log arithmetic and the
seeding contract are exact: ceil(|train| / batch) * epochs optimizer steps,
one log entry every ``logging_steps`` steps, and identical results for
identical config+seed on the same backend. Optimizer defaults (AdamW, no
weight decay, linear LR decay to zero, no warmup, gradient clipping at 1.0)
are recorded in training_config.json alongside the configured values.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import re
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .codebook import FRAME_ORDER, NUM_FRAMES, FrameCode, frame_from_index
from .corpus import Dataset

# Fixed training-loop defaults, recorded in every training_config.json.
OPTIMIZER_DEFAULTS = {
    "optimizer": "adamw",
    "weight_decay": 0.0,
    "adam_betas": [0.9, 0.999],
    "adam_epsilon": 1e-8,
    "lr_scheduler": "linear_decay_to_zero",
    "warmup_steps": 0,
    "max_grad_norm": 1.0,
}

LABEL_MAP = {code.value: i for i, code in enumerate(FRAME_ORDER)}

TRAIN_LOG_FILENAME = "train_log.jsonl"


def _quiet_transformers():
    import transformers

    transformers.logging.set_verbosity_error()
    try:
        transformers.utils.logging.disable_progress_bar()
    except Exception:
        pass


class EncoderLoadError(RuntimeError):
    """The pretrained encoder cannot be read (missing path, no hub access)."""


class OutputConflictError(RuntimeError):
    """output_dir already has contents and overwriting is disabled."""


class ArtifactError(RuntimeError):
    """A model artifact is missing or corrupt."""


class TrainingDataError(ValueError):
    """Training data violates the label contract."""


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters and run settings for one fine-tuning job.

    The seed is mandatory: every artifact records the exact configuration
    that produced it, including the seed, via the config fingerprint.
    """

    seed: int
    output_dir: str
    pretrained_encoder_id: str = "bert-base-uncased"
    num_labels: int = NUM_FRAMES
    learning_rate: float = 2e-5
    train_batch_size: int = 4
    eval_batch_size: int = 4
    epochs: int = 5
    logging_steps: int = 10
    max_sequence_length: int = 512
    overwrite_output: bool = True

    def __post_init__(self):
        if self.num_labels != NUM_FRAMES:
            raise ValueError(f"num_labels must be {NUM_FRAMES}, got {self.num_labels}")
        for name in ("train_batch_size", "eval_batch_size", "epochs", "logging_steps",
                     "max_sequence_length"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    def to_obj(self) -> dict:
        obj = asdict(self)
        obj.update(OPTIMIZER_DEFAULTS)
        return obj

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_obj(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @classmethod
    def from_obj(cls, obj: dict) -> "TrainingConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in obj.items() if k in known})


@dataclass(frozen=True)
class TrainLogEntry:
    """One logging event: global step, fractional epoch, windowed train loss."""

    step: int
    epoch: float
    train_loss: float
    eval_metrics: dict | None = None

    def to_obj(self) -> dict:
        return {
            "step": self.step,
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "eval_metrics": self.eval_metrics,
        }


@dataclass(frozen=True)
class ScoreVector:
    """Per-frame probabilities from the classification head (sum to 1)."""

    scores: dict[FrameCode, float]

    def as_array(self) -> np.ndarray:
        return np.array([self.scores[c] for c in FRAME_ORDER], dtype=np.float64)

    def to_obj(self) -> dict:
        return {c.value: self.scores[c] for c in FRAME_ORDER}


@dataclass(frozen=True)
class EncodedText:
    """Descriptor of one tokenized text: ids, length, truncation flag."""

    input_ids: tuple[int, ...]
    length: int
    truncated: bool


@dataclass(frozen=True)
class ModelArtifact:
    """Handle to a trained classifier: weight/tokenizer paths plus metadata."""

    weights_ref: str
    tokenizer_ref: str
    label_map: dict[str, int]
    config_fingerprint: str
    train_doc_ids: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.label_map != LABEL_MAP:
            raise ArtifactError(
                f"artifact label_map {self.label_map} does not match the codebook order"
            )


_TOKENIZERS: dict[str, object] = {}
_MODELS: dict[str, object] = {}


def _load_tokenizer(encoder_id: str):
    if encoder_id not in _TOKENIZERS:
        _quiet_transformers()
        from transformers import AutoTokenizer

        try:
            _TOKENIZERS[encoder_id] = AutoTokenizer.from_pretrained(encoder_id)
        except Exception as exc:
            raise EncoderLoadError(
                f"cannot load tokenizer {encoder_id!r}: {exc}"
            ) from exc
    return _TOKENIZERS[encoder_id]


def encode(text: str, config: TrainingConfig) -> EncodedText:
    """Tokenize one text with boundary tokens and tail truncation."""
    tokenizer = _load_tokenizer(config.pretrained_encoder_id)
    full_ids = tokenizer(text, add_special_tokens=True)["input_ids"]
    ids = tokenizer(
        text,
        add_special_tokens=True,
        truncation=True,
        max_length=config.max_sequence_length,
    )["input_ids"]
    return EncodedText(
        input_ids=tuple(ids),
        length=len(ids),
        truncated=len(full_ids) > len(ids),
    )


def _set_all_seeds(seed: int):
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def _tokenize_texts(tokenizer, texts: list[str], max_length: int):
    return tokenizer(
        texts,
        add_special_tokens=True,
        truncation=True,
        max_length=max_length,
        padding=False,
    )["input_ids"]


def _collate(tokenizer, id_lists: list[list[int]]) -> dict[str, torch.Tensor]:
    """Pad a batch to its longest sequence (dynamic padding collation)."""
    padded = tokenizer.pad(
        {"input_ids": id_lists}, padding="longest", return_tensors="pt"
    )
    return {
        "input_ids": padded["input_ids"],
        "attention_mask": padded["attention_mask"],
    }


def _dataset_labels(ds: Dataset) -> list[int]:
    labels = []
    for record in ds.records:
        main = record.labels.main
        if main not in FRAME_ORDER:
            raise TrainingDataError(
                f"record {record.paragraph.para_id!r} has label outside the "
                f"six-code set: {main!r}"
            )
        labels.append(LABEL_MAP[main.value])
    return labels


def _eval_metrics(model, tokenizer, id_lists, labels, batch_size: int) -> dict:
    """Loss, accuracy, and macro F1 on a tokenized evaluation set."""
    from .evaluate import confusion, report_from_matrix

    model.eval()
    total_loss, n = 0.0, 0
    predictions: list[int] = []
    with torch.no_grad():
        for start in range(0, len(id_lists), batch_size):
            chunk = id_lists[start : start + batch_size]
            batch = _collate(tokenizer, chunk)
            target = torch.tensor(labels[start : start + len(chunk)])
            out = model(**batch, labels=target)
            total_loss += out.loss.item() * len(chunk)
            n += len(chunk)
            predictions.extend(out.logits.argmax(dim=-1).tolist())
    model.train()
    cm = confusion(
        [frame_from_index(i) for i in labels],
        [frame_from_index(i) for i in predictions],
    )
    report = report_from_matrix(cm)
    return {
        "eval_loss": total_loss / n,
        "eval_accuracy": report.accuracy,
        "eval_macro_f1": report.macro[2],
    }


def fine_tune(
    config: TrainingConfig,
    train_set: Dataset,
    eval_set: Dataset | None = None,
) -> tuple[ModelArtifact, list[TrainLogEntry]]:
    """Fine-tune the configured encoder on main-frame labels.

    Runs ``epochs`` full passes at the configured batch size and learning
    rate, emits a TrainLogEntry every ``logging_steps`` optimizer steps
    (evaluating on ``eval_set`` at those points when one is given), and
    persists weights, tokenizer, label map, config, and the log to
    ``output_dir``.
    """
    if len(train_set) == 0:
        raise TrainingDataError("training set is empty")
    output_dir = Path(config.output_dir)
    if output_dir.exists() and any(output_dir.iterdir()) and not config.overwrite_output:
        raise OutputConflictError(
            f"output dir {output_dir} is not empty and overwrite_output is false"
        )

    _set_all_seeds(config.seed)
    tokenizer = _load_tokenizer(config.pretrained_encoder_id)
    _quiet_transformers()
    from transformers import AutoModelForSequenceClassification

    try:
        model = AutoModelForSequenceClassification.from_pretrained(
            config.pretrained_encoder_id,
            num_labels=config.num_labels,
            id2label={i: c.value for i, c in enumerate(FRAME_ORDER)},
            label2id=dict(LABEL_MAP),
        )
    except EncoderLoadError:
        raise
    except Exception as exc:
        raise EncoderLoadError(
            f"cannot load encoder {config.pretrained_encoder_id!r}: {exc}"
        ) from exc

    train_ids = _tokenize_texts(tokenizer, train_set.texts(), config.max_sequence_length)
    train_labels = _dataset_labels(train_set)
    eval_ids = eval_labels = None
    if eval_set is not None and len(eval_set) > 0:
        eval_ids = _tokenize_texts(tokenizer, eval_set.texts(), config.max_sequence_length)
        eval_labels = _dataset_labels(eval_set)

    steps_per_epoch = math.ceil(len(train_set) / config.train_batch_size)
    total_steps = steps_per_epoch * config.epochs
    optimizer = torch.optim.AdamW(
        model.parameters(),
        lr=config.learning_rate,
        betas=tuple(OPTIMIZER_DEFAULTS["adam_betas"]),
        eps=OPTIMIZER_DEFAULTS["adam_epsilon"],
        weight_decay=OPTIMIZER_DEFAULTS["weight_decay"],
    )
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: max(0.0, 1.0 - step / total_steps)
    )
    shuffle_rng = torch.Generator().manual_seed(config.seed)

    model.train()
    log: list[TrainLogEntry] = []
    window_loss, window_batches = 0.0, 0
    step = 0
    for _ in range(config.epochs):
        order = torch.randperm(len(train_ids), generator=shuffle_rng).tolist()
        for start in range(0, len(order), config.train_batch_size):
            indices = order[start : start + config.train_batch_size]
            batch = _collate(tokenizer, [train_ids[i] for i in indices])
            target = torch.tensor([train_labels[i] for i in indices])
            out = model(**batch, labels=target)
            out.loss.backward()
            torch.nn.utils.clip_grad_norm_(
                model.parameters(), OPTIMIZER_DEFAULTS["max_grad_norm"]
            )
            optimizer.step()
            scheduler.step()
            optimizer.zero_grad()
            step += 1
            window_loss += out.loss.item()
            window_batches += 1
            if step % config.logging_steps == 0:
                eval_metrics = None
                if eval_ids is not None:
                    eval_metrics = _eval_metrics(
                        model, tokenizer, eval_ids, eval_labels, config.eval_batch_size
                    )
                log.append(
                    TrainLogEntry(
                        step=step,
                        epoch=step / steps_per_epoch,
                        train_loss=window_loss / window_batches,
                        eval_metrics=eval_metrics,
                    )
                )
                window_loss, window_batches = 0.0, 0
    assert step == total_steps

    artifact = _save_artifact(config, model, tokenizer, train_set, log, step)
    return artifact, log


def _save_artifact(config, model, tokenizer, train_set, log, optimizer_steps) -> ModelArtifact:
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(output_dir)
    tokenizer.save_pretrained(output_dir)
    (output_dir / "label_map.json").write_text(
        json.dumps(LABEL_MAP, indent=2) + "\n", encoding="utf-8"
    )
    (output_dir / "training_config.json").write_text(
        json.dumps(config.to_obj(), indent=2) + "\n", encoding="utf-8"
    )
    train_doc_ids = sorted(train_set.doc_ids())
    fingerprint = {
        "config_fingerprint": config.fingerprint(),
        "train_doc_ids": train_doc_ids,
        "train_size": len(train_set),
        "optimizer_steps": optimizer_steps,  # executed count, not derived
    }
    (output_dir / "training_fingerprint.json").write_text(
        json.dumps(fingerprint, indent=2) + "\n", encoding="utf-8"
    )
    with (output_dir / TRAIN_LOG_FILENAME).open("w", encoding="utf-8") as fh:
        for entry in log:
            fh.write(json.dumps(entry.to_obj()) + "\n")
    _MODELS.pop(str(output_dir), None)  # a retrained dir must not serve stale weights
    return ModelArtifact(
        weights_ref=str(output_dir),
        tokenizer_ref=str(output_dir),
        label_map=dict(LABEL_MAP),
        config_fingerprint=config.fingerprint(),
        train_doc_ids=frozenset(train_doc_ids),
    )


def load_artifact(path) -> ModelArtifact:
    """Open a saved artifact directory, validating its metadata."""
    path = Path(path)
    label_map_path = path / "label_map.json"
    fingerprint_path = path / "training_fingerprint.json"
    if not path.is_dir() or not label_map_path.exists():
        raise ArtifactError(f"no model artifact at {path}")
    try:
        label_map = json.loads(label_map_path.read_text(encoding="utf-8"))
        fingerprint = json.loads(fingerprint_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"corrupt artifact at {path}: {exc}") from exc
    return ModelArtifact(
        weights_ref=str(path),
        tokenizer_ref=str(path),
        label_map=label_map,
        config_fingerprint=fingerprint.get("config_fingerprint", ""),
        train_doc_ids=frozenset(fingerprint.get("train_doc_ids", ())),
    )


def _load_backend(artifact: ModelArtifact):
    key = artifact.weights_ref
    if key not in _MODELS:
        _quiet_transformers()
        from transformers import AutoModelForSequenceClassification

        try:
            model = AutoModelForSequenceClassification.from_pretrained(artifact.weights_ref)
        except Exception as exc:
            raise ArtifactError(
                f"cannot load model weights from {artifact.weights_ref!r}: {exc}"
            ) from exc
        model.eval()
        _MODELS[key] = (model, _load_tokenizer(artifact.tokenizer_ref))
    return _MODELS[key]


def predict_batch(
    artifact: ModelArtifact, texts: list[str]
) -> list[tuple[ScoreVector, FrameCode]]:
    """Scores and main-frame predictions for a list of texts (order-preserving)."""
    if not texts:
        raise ValueError("texts must be a non-empty list")
    model, tokenizer = _load_backend(artifact)
    max_length = int(getattr(model.config, "max_position_embeddings", 512))
    results: list[tuple[ScoreVector, FrameCode]] = []
    with torch.no_grad():
        for start in range(0, len(texts), 32):
            chunk = texts[start : start + 32]
            batch = tokenizer(
                chunk,
                add_special_tokens=True,
                truncation=True,
                max_length=max_length,
                padding=True,
                return_tensors="pt",
            )
            batch = {k: batch[k] for k in ("input_ids", "attention_mask")}
            probs = torch.softmax(model(**batch).logits, dim=-1).double()
            probs = probs / probs.sum(dim=-1, keepdim=True)
            for rowvec in probs.numpy():
                scores = ScoreVector(
                    scores={c: float(rowvec[i]) for i, c in enumerate(FRAME_ORDER)}
                )
                # argmax takes the first maximum, i.e. ties break to the
                # lowest frame index.
                main = frame_from_index(int(np.argmax(rowvec)))
                results.append((scores, main))
    return results


def predict(artifact: ModelArtifact, text: str) -> tuple[ScoreVector, FrameCode]:
    """Scores and main-frame prediction for one text."""
    return predict_batch(artifact, [text])[0]


def fit_predict_fold(
    config: TrainingConfig, train_ds: Dataset, held_out: Dataset
) -> list[FrameCode]:
    """Train on one fold split and predict the held-out fold's main frames."""
    artifact, _ = fine_tune(config, train_ds, eval_set=None)
    return [main for _, main in predict_batch(artifact, held_out.texts())]


# ---------------------------------------------------------------------------
# offline reduced-size encoder

_WORD_RE = re.compile(r"\w+|[^\w\s]")


def build_reduced_encoder(
    texts: list[str],
    out_dir,
    hidden_size: int = 512,
    num_hidden_layers: int = 2,
    num_attention_heads: int = 8,
    seed: int = 0,
) -> str:
    """Construct a small randomly initialized encoder with a corpus vocab.

    Stand-in for the full pretrained encoder in offline environments and
    fast tests: a wordpiece vocab is derived from ``texts`` (with single
    characters as subword fallback) and a shallow encoder is saved in the
    standard layout, so ``fine_tune`` can load it like any encoder id.
    The fixed 2e-5 learning-rate regime needs width to move a fresh
    classification head: 512 hidden units trains reliably, 384 is unstable,
    256 and below underfit.
    """
    _quiet_transformers()
    from transformers import BertConfig, BertModel, BertTokenizerFast

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    specials = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    words = sorted({w for t in texts for w in _WORD_RE.findall(t.lower())})
    chars = sorted({ch for w in words for ch in w})
    pieces = specials + words + [c for c in chars if c not in words]
    pieces += [f"##{c}" for c in chars]
    seen = set()
    vocab = [p for p in pieces if not (p in seen or seen.add(p))]
    (out_dir / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(str(out_dir / "vocab.txt"), do_lower_case=True)
    tokenizer.save_pretrained(out_dir)

    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden_size,
        num_hidden_layers=num_hidden_layers,
        num_attention_heads=num_attention_heads,
        intermediate_size=hidden_size * 2,
        max_position_embeddings=512,
    )
    BertModel(config).save_pretrained(out_dir)
    return str(out_dir)
