"""HTTP service for annotation sessions, agreement reports, and classification.

Single-process FastAPI app over file-backed stores. Annotation writes are
serialized by the store's lock; read endpoints are pure functions of the
store state; classification runs against an immutable loaded artifact.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .annotate import (
    AgreementInputError,
    AnnotationStore,
    AnnotationWorkflow,
    DegenerateAgreementError,
    DuplicateAnnotationError,
    SequencingError,
    SessionError,
    agreement_report,
    aligned_main_frames,
)
from .codebook import (
    FrameCodeError,
    LabelSet,
    LabelValidationError,
    codebook_text,
    parse_frame_code,
)
from .config import AppConfig
from .corpus import load_paragraphs
from .evaluate import confusion


class SessionRequest(BaseModel):
    coder_id: str


class AnnotationRequest(BaseModel):
    para_id: str
    frames: list[str]
    main: str


class ClassifyRequest(BaseModel):
    texts: list[str]


def _parse_labels(payload: AnnotationRequest) -> LabelSet:
    try:
        labels = LabelSet(
            frames=[parse_frame_code(c) for c in payload.frames],
            main=parse_frame_code(payload.main),
        )
    except FrameCodeError as exc:
        raise HTTPException(status_code=422, detail={"violations": [str(exc)]})
    return labels


def create_app(config: AppConfig, classifier=None) -> FastAPI:
    """Build the service app.

    ``classifier`` is a callable texts -> list[(ScoreVector, FrameCode)];
    when omitted, a model is loaded lazily from config.model_dir, and
    /api/classify answers 503 until one is available.
    """
    paragraphs = load_paragraphs(config.corpus_path) if config.corpus_path else []
    store = AnnotationStore(config.annotations_path)
    workflow = AnnotationWorkflow(paragraphs, store)
    app = FastAPI(title="newsframes annotation service")
    state = {"classifier": classifier}

    def get_classifier():
        if state["classifier"] is None and config.model_dir:
            model_dir = Path(config.model_dir)
            if model_dir.is_dir() and (model_dir / "label_map.json").exists():
                from . import train

                artifact = train.load_artifact(model_dir)
                state["classifier"] = lambda texts: train.predict_batch(artifact, texts)
        return state["classifier"]

    @app.get("/api/codebook")
    def get_codebook():
        return {
            "frames": [
                {
                    "code": d.code.value,
                    "name": d.name,
                    "guiding_questions": list(d.guiding_questions),
                }
                for d in codebook_text()
            ]
        }

    @app.post("/api/session", status_code=201)
    def create_session(payload: SessionRequest):
        session = workflow.create_session(payload.coder_id)
        return {
            "session_id": session.session_id,
            "coder_id": session.coder_id,
            "queue_size": len(session.queue),
            "cursor": session.cursor,
        }

    @app.get("/api/session/{session_id}/next")
    def next_paragraph(session_id: str):
        try:
            paragraph = workflow.next_paragraph(session_id)
            session = workflow.get_session(session_id)
        except SessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        if paragraph is None:
            return {"done": True, "position": session.cursor, "total": len(session.queue)}
        return {
            "done": False,
            "position": session.cursor,
            "total": len(session.queue),
            "paragraph": {
                "para_id": paragraph.para_id,
                "doc_id": paragraph.doc_id,
                "ordinal": paragraph.ordinal,
                "text": paragraph.text,
            },
        }

    @app.post("/api/session/{session_id}/annotations", status_code=201)
    def submit_annotation(session_id: str, payload: AnnotationRequest):
        labels = _parse_labels(payload)
        try:
            record = workflow.submit_annotation(session_id, payload.para_id, labels)
        except SessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except LabelValidationError as exc:
            raise HTTPException(status_code=422, detail={"violations": exc.violations})
        except DuplicateAnnotationError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except SequencingError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return record.to_obj()

    @app.get("/api/agreement")
    def get_agreement(coders: str):
        names = [c.strip() for c in coders.split(",") if c.strip()]
        if len(names) != 2:
            raise HTTPException(
                status_code=422,
                detail="coders must name exactly two coders, e.g. coders=a,b",
            )
        try:
            report = agreement_report(store, names[0], names[1])
        except (AgreementInputError, DegenerateAgreementError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        labels_a, labels_b = aligned_main_frames(store, names[0], names[1])
        grid = confusion(labels_a, labels_b).to_lists()
        return {**report.to_obj(), "coders": names, "grid": grid}

    @app.get("/api/progress")
    def get_progress():
        return {
            "coders": store.coder_counts(),
            "total_paragraphs": len(paragraphs),
        }

    @app.post("/api/classify")
    def classify(payload: ClassifyRequest):
        predict = get_classifier()
        if predict is None:
            raise HTTPException(status_code=503, detail="no model loaded")
        if not payload.texts:
            raise HTTPException(status_code=422, detail="texts must be non-empty")
        results = predict(payload.texts)
        return {
            "results": [
                {"scores": scores.to_obj(), "main": main.value}
                for scores, main in results
            ]
        }

    return app


def serve(config: AppConfig, port: int | None = None, classifier=None) -> None:
    """Run the service with uvicorn (blocking)."""
    import uvicorn

    app = create_app(config, classifier=classifier)
    uvicorn.run(app, host="127.0.0.1", port=port or config.port, log_level="warning")
